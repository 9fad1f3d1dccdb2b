from __future__ import annotations

from .instance import LotSizingInstance, Policy
from .milp import SolverSolution, Status


class ModelIntegrityError(RuntimeError):
    """Solved review and cycle binaries disagree (usually a tolerance issue)."""


def extract_policy(sol: SolverSolution, inst: LotSizingInstance) -> Policy:
    """Reviews are the periods with ``delta = 1``; ``S_t = I_t + d_t`` there."""
    if sol.status is not Status.OPTIMAL:
        raise ValueError(f"cannot extract a policy from a {sol.status.value} solution")
    N = inst.N
    means = inst.expected_demand()
    reviews = [t for t in range(1, N + 1) if sol.value(f"delta[{t}]") > 0.5]
    start = 1
    for t in range(1, N + 1):
        if t in reviews:
            start = t
        for j in range(1, t + 1):
            p = sol.value(f"P[{j},{t}]")
            if (p > 0.5) != (j == start):
                raise ModelIntegrityError(
                    f"P[{j},{t}] = {p:g} but the cycle covering period {t} starts at {start}")
    levels = {t: sol.value(f"I[{t}]") + float(means[t - 1]) for t in reviews}
    return Policy(levels)
