"""Exact and simulated evaluation of static-dynamic policies.

Within a cycle opened at review ``j`` with level ``S_j`` the closing level of
period ``t`` is ``S_j - d_{j..t}``; before the first review the level is
``I0``.  The exact evaluator integrates the loss functions of those range
sums, the simulator replays the same dynamics on sampled demand.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models.instance import (
    LotSizingInstance, Measure, ModelVariant, PenaltyBasis, Policy, PolicyError, Shortage,
)

SERVICE_TOL = 1e-6
CHUNK = 8192
# solver levels can land a hair below an atom of a discrete range-sum law
LEVEL_ROUNDOFF = 1e-9


class ConsistencyError(ValueError):
    """Lower and upper bounds cross."""


class ServiceInfeasible(PolicyError):
    pass


@dataclass
class EvaluationReport:
    """Expected value of a policy plus per-period stock and service figures.

    ``objective`` is the expected total cost (backorder) or profit (lost
    sales).  Simulation reports carry ``std_errors`` keyed like the fields.
    """

    objective: float
    sense: str
    on_hand: np.ndarray
    shortage: np.ndarray
    alpha: np.ndarray
    cycle_fill_rates: dict
    fill_rate: float
    orders: dict
    method: str = "exact"
    reps: int | None = None
    std_errors: dict = field(default_factory=dict)
    service_target: float | None = None
    service_ok: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def expected_cost(self) -> float:
        if self.sense != "cost":
            raise AttributeError("profit report has no expected cost")
        return self.objective

    @property
    def expected_profit(self) -> float:
        if self.sense != "profit":
            raise AttributeError("cost report has no expected profit")
        return self.objective

    @property
    def std_error(self) -> float | None:
        return self.std_errors.get("objective")

    @property
    def min_alpha(self) -> float:
        return float(self.alpha.min())

    def flat(self) -> dict:
        out = {"method": self.method, "sense": self.sense, "objective": self.objective}
        if self.reps is not None:
            out["reps"] = self.reps
            out["std_error"] = self.std_error
        out["fill_rate"] = self.fill_rate
        out["min_alpha"] = self.min_alpha
        out["service_ok"] = self.service_ok
        for t, v in enumerate(self.on_hand, 1):
            out[f"on_hand_{t}"] = float(v)
        for t, v in enumerate(self.shortage, 1):
            out[f"shortage_{t}"] = float(v)
        for t, v in enumerate(self.alpha, 1):
            out[f"alpha_{t}"] = float(v)
        for j, v in self.cycle_fill_rates.items():
            out[f"cycle_fill_rate_{j}"] = float(v)
        for r, q in self.orders.items():
            out[f"order_{r}"] = float(q)
        out.update(self.extra)
        return out

    def to_text(self) -> str:
        def fmt(v):
            return f"{v:.10g}" if isinstance(v, float) else str(v)
        return "\n".join(f"{k} = {fmt(v)}" for k, v in self.flat().items()) + "\n"

    def to_csv_row(self, header: bool = True) -> str:
        row = self.flat()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow(row)
        return buf.getvalue()


def _variant_of(inst: LotSizingInstance, variant) -> ModelVariant:
    if variant is None:
        return inst.variant()
    if isinstance(variant, ModelVariant):
        if variant.shortage is not inst.shortage or variant.measure is not inst.measure:
            raise ValueError(f"variant {variant.cell} does not match instance {inst.variant().cell}")
        return variant
    return inst.variant(variant)


def _cycles(policy: Policy, N: int):
    """(start, end, level_key) per cycle; level_key 0 is the I0 segment."""
    starts = policy.cycle_starts(N)
    out, t = [], 1
    while t <= N:
        key = starts[t - 1]
        end = t
        while end < N and starts[end] == key:
            end += 1
        out.append((t, end, key))
        t = end + 1
    return out


def _check(policy: Policy, inst: LotSizingInstance):
    policy.validate(inst)
    if inst.measure is Measure.ALPHA and not policy.reviews and inst.I0 <= 0:
        raise ServiceInfeasible("no reviews and no initial stock cannot meet an alpha target")


def exact_policy_cost(policy: Policy, inst: LotSizingInstance, variant=None) -> EvaluationReport:
    """Expected cost or profit of ``policy`` by loss-function integration."""
    variant = _variant_of(inst, variant)
    _check(policy, inst)
    N = inst.N
    means = inst.expected_demand()
    on_hand = np.zeros(N)
    short = np.zeros(N)
    alpha = np.zeros(N)
    cyc_fill = {}
    end_short = []
    for start, end, key in _cycles(policy, N):
        S = policy.levels[key] if key else inst.I0
        worst = 1.0
        for t in range(start, end + 1):
            law = inst.demand.convolution(start, t).law
            on_hand[t - 1] = float(law.complementary_loss(S))
            short[t - 1] = float(law.loss(S))
            alpha[t - 1] = float(law.cdf(S + LEVEL_ROUNDOFF * max(1.0, abs(S))))
            mu = inst.demand.mean_range(start, t)
            if mu > 0:
                worst = min(worst, 1.0 - short[t - 1] / mu)
        cyc_fill[start] = worst
        end_short.append(short[end - 1])
    total = float(means.sum())
    fill = 1.0 - float(np.sum(end_short)) / total if total > 0 else 1.0

    lost = inst.shortage is Shortage.LOST_SALES
    orders = {}
    for r, S in policy.levels.items():
        if r == 1:
            prev = max(inst.I0, 0.0) if lost else inst.I0
        else:
            prev = on_hand[r - 2] if lost else on_hand[r - 2] - short[r - 2]
        orders[r] = S - prev

    n_orders = len(policy.levels)
    if lost:
        value = (inst.s or 0.0) * inst.I0 + inst.margin * sum(orders.values()) - inst.a * n_orders
        value -= inst.h * on_hand.sum() + (inst.s or 0.0) * on_hand[-1]
        if inst.measure is Measure.PENALTY:
            charged = end_short if inst.penalty_basis is PenaltyBasis.PER_UNIT_SHORT else short
            value -= inst.b * float(np.sum(charged))
        sense = "profit"
    else:
        value = inst.a * n_orders + inst.v * sum(orders.values()) + inst.h * on_hand.sum()
        if inst.measure is Measure.PENALTY:
            value += inst.b * short.sum()
        sense = "cost"
    report = EvaluationReport(float(value), sense, on_hand, short, alpha, cyc_fill, fill, orders)
    _attach_service(report, inst)
    return report


def _attach_service(report: EvaluationReport, inst: LotSizingInstance, tol=SERVICE_TOL):
    m = inst.measure
    if m is Measure.PENALTY:
        return
    report.service_target = inst.level
    if m is Measure.ALPHA:
        report.service_ok = bool(report.alpha.min() >= inst.level - tol)
    elif m is Measure.BETA_CYC:
        report.service_ok = bool(min(report.cycle_fill_rates.values()) >= inst.level - tol)
    else:
        report.service_ok = bool(report.fill_rate >= inst.level - tol)


# ---------------------------------------------------------------------------
# simulation


def _simulate_chunk(policy, inst, lost, truncate, n, seed_seq):
    rng = np.random.default_rng(seed_seq)
    N = inst.N
    u = rng.random((n, N))
    demand = np.empty((n, N))
    for t, dist in enumerate(inst.demand.periods):
        demand[:, t] = dist.sample(u[:, t])
    if truncate:
        np.maximum(demand, 0.0, out=demand)
    level = np.full(n, float(inst.I0))
    close = np.empty((n, N))
    ordered = np.zeros(n)
    prev = np.full(n, float(inst.I0))
    for t in range(1, N + 1):
        if t in policy.levels:
            S = policy.levels[t]
            base = np.maximum(prev, 0.0) if lost else prev
            ordered += S - base
            level = np.full(n, S)
        level = level - demand[:, t - 1]
        close[:, t - 1] = level
        prev = level
    on_hand = np.maximum(close, 0.0)
    short = np.maximum(-close, 0.0)
    return on_hand, short, ordered


def simulate_policy(policy: Policy, inst: LotSizingInstance, variant=None, reps: int = 100_000,
                    seed: int = 0, workers: int = 1, truncate_at_zero: bool = False) -> EvaluationReport:
    """Monte Carlo replay of the policy dynamics.

    Replications are generated in fixed chunks, each with its own spawned
    seed, so results depend only on ``seed`` and not on ``workers``.
    ``truncate_at_zero`` clips negative normal draws; the exact evaluator
    never truncates, so leave it off for consistency checks.
    """
    variant = _variant_of(inst, variant)
    if reps < 2:
        raise ValueError("simulation needs at least two replications")
    _check(policy, inst)
    lost = inst.shortage is Shortage.LOST_SALES
    sizes = [CHUNK] * (reps // CHUNK) + ([reps % CHUNK] if reps % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _simulate_chunk(policy, inst, lost, truncate_at_zero, *job), jobs))
    else:
        parts = [_simulate_chunk(policy, inst, lost, truncate_at_zero, *job) for job in jobs]
    on_hand = np.concatenate([p[0] for p in parts])
    short = np.concatenate([p[1] for p in parts])
    ordered = np.concatenate([p[2] for p in parts])

    N = inst.N
    n_orders = len(policy.levels)
    cycles = _cycles(policy, N)
    ends = [end for _, end, _ in cycles]
    if lost:
        s = inst.s or 0.0
        value = s * inst.I0 + inst.margin * ordered - inst.a * n_orders
        value = value - inst.h * on_hand.sum(axis=1) - s * on_hand[:, -1]
        if inst.measure is Measure.PENALTY:
            cols = [e - 1 for e in ends] if inst.penalty_basis is PenaltyBasis.PER_UNIT_SHORT else slice(None)
            value = value - inst.b * short[:, cols].sum(axis=1)
        sense = "profit"
    else:
        value = inst.a * n_orders + inst.v * ordered + inst.h * on_hand.sum(axis=1)
        if inst.measure is Measure.PENALTY:
            value = value + inst.b * short.sum(axis=1)
        sense = "cost"

    def se(x):
        return float(np.std(x, ddof=1, axis=0) / math.sqrt(reps)) if np.ndim(x) == 1 else \
            np.std(x, ddof=1, axis=0) / math.sqrt(reps)

    stocked = (on_hand > 0) | (short == 0)
    alpha = stocked.mean(axis=0)
    total = float(inst.expected_demand().sum())
    end_short = short[:, [e - 1 for e in ends]].sum(axis=1)
    fill = 1.0 - float(end_short.mean()) / total if total > 0 else 1.0
    cyc = {}
    for start, end, _ in cycles:
        worst = 1.0
        for t in range(start, end + 1):
            mu = inst.demand.mean_range(start, t)
            if mu > 0:
                worst = min(worst, 1.0 - float(short[:, t - 1].mean()) / mu)
        cyc[start] = worst
    orders = {}
    for r, S in policy.levels.items():
        if r == 1:
            orders[r] = S - (max(inst.I0, 0.0) if lost else inst.I0)
        else:
            prev = on_hand[:, r - 2] if lost else on_hand[:, r - 2] - short[:, r - 2]
            orders[r] = S - float(prev.mean())
    report = EvaluationReport(
        float(value.mean()), sense, on_hand.mean(axis=0), short.mean(axis=0), alpha, cyc, fill, orders,
        method="simulation", reps=reps,
        std_errors={
            "objective": se(value),
            "on_hand": se(on_hand),
            "shortage": se(short),
            "alpha": np.sqrt(alpha * (1 - alpha) / reps),
            "fill_rate": se(end_short) / total if total > 0 else 0.0,
        },
        extra={"min_on_hand": float(on_hand.min())})
    _attach_service(report, inst)
    return report


def optimality_gap(lb: float, ub: float, tol: float = 1e-9) -> float:
    """Relative gap ``(ub - lb) / |ub|`` between a lower and an upper bound.

    The crossing tolerance scales with the magnitude of the bounds.
    """
    lb, ub = float(lb), float(ub)
    scale = max(1.0, abs(lb), abs(ub))
    if lb > ub + tol * scale:
        raise ConsistencyError(f"lower bound {lb} exceeds upper bound {ub}")
    if ub == 0.0:
        return 0.0 if lb == 0.0 else math.inf
    return max(ub - lb, 0.0) / abs(ub)
