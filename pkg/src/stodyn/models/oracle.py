"""Schedule enumeration: an independent check of the MILP optima.

Once the review schedule is fixed the cycle structure is known, so each
variant reduces to a linear program in the order-up-to levels ``S_r`` plus
epigraph variables for the loss bounds.  The LP is written directly from the
cycles, without the ``P``/``delta`` big-M machinery of the MILP.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import optimize

from .builders import lost_sales_big_m
from .instance import Direction, LotSizingInstance, Measure, ModelVariant, PenaltyBasis, Policy, Shortage

MAX_ORACLE_PERIODS = 10


class _LP:
    def __init__(self):
        self.names = []
        self.bounds = []
        self.A_ub, self.b_ub = [], []
        self.cost = {}
        self.constant = 0.0

    def var(self, name, lo=None, hi=None):
        self.names.append(name)
        self.bounds.append((lo, hi))
        return len(self.names) - 1

    def ge(self, coefs, rhs):
        """sum coefs * x >= rhs"""
        self.A_ub.append({k: -c for k, c in coefs.items()})
        self.b_ub.append(-rhs)

    def le(self, coefs, rhs):
        self.A_ub.append(dict(coefs))
        self.b_ub.append(rhs)

    def solve(self, maximize):
        n = len(self.names)
        c = np.zeros(n)
        for k, v in self.cost.items():
            c[k] += v
        A = np.zeros((len(self.A_ub), n))
        for i, row in enumerate(self.A_ub):
            for k, v in row.items():
                A[i, k] += v
        sign = -1.0 if maximize else 1.0
        res = optimize.linprog(sign * c, A_ub=A if len(self.A_ub) else None,
                               b_ub=np.array(self.b_ub) if self.b_ub else None,
                               bounds=self.bounds, method="highs")
        if res.status != 0:
            return None, None
        return self.constant + float(c @ res.x), res.x


def _schedule_lp(inst: LotSizingInstance, variant: ModelVariant, lins, reviews, tight_reorder=False):
    N = inst.N
    d = inst.expected_demand()
    upper = not variant.optimistic
    lp = _LP()
    L = {r: lp.var(f"S[{r}]") for r in reviews}
    H = {t: lp.var(f"H[{t}]", 0.0) for t in range(1, N + 1)}
    needs_shortage = inst.measure is not Measure.ALPHA
    B = {t: lp.var(f"B[{t}]", 0.0) for t in range(1, N + 1)} if needs_shortage else {}

    start = []
    current = 0
    for t in range(1, N + 1):
        if t in L:
            current = t
        start.append(current)

    def level(t):
        j = start[t - 1]
        return ({L[j]: 1.0}, 0.0) if j else ({}, inst.I0)

    def cycle(t):
        return start[t - 1] or 1

    def expected_level(t):
        """E[I_t] as (coefs, const); t = 0 gives I0."""
        if t == 0:
            return {}, inst.I0
        coefs, const = level(t)
        return coefs, const - inst.demand.mean_range(cycle(t), t)

    ends = [t for t in range(1, N + 1) if t == N or (t + 1) in L]

    for t in range(1, N + 1):
        j = cycle(t)
        lin = lins[(j, t)]
        mu = inst.demand.mean_range(j, t)
        e = lin.max_error if upper else 0.0
        coefs, const = level(t)
        slopes, inter = lin.slopes, lin.intercepts
        lp.ge({H[t]: 1.0}, e)
        for c_i, a_i in zip(slopes, inter):
            row = {H[t]: 1.0}
            for k, v in coefs.items():
                row[k] = row.get(k, 0.0) - c_i * v
            lp.ge(row, c_i * const - a_i + e)
            if B:
                # expected shortage: complementary bound minus (S - mu)
                row = {B[t]: 1.0}
                for k, v in coefs.items():
                    row[k] = row.get(k, 0.0) - (c_i - 1.0) * v
                lp.ge(row, (c_i - 1.0) * const - a_i + mu + e)
        if B:
            row = {B[t]: 1.0}
            for k, v in coefs.items():
                row[k] = row.get(k, 0.0) + v
            lp.ge(row, mu - const + e)
        if inst.measure is Measure.ALPHA:
            q = float(inst.demand.convolution(j, t).law.quantile(inst.level))
            if coefs:
                lp.ge(coefs, q)
            elif const < q - 1e-12:
                return None, None
        if inst.measure is Measure.BETA_CYC:
            lp.le({B[t]: 1.0}, (1.0 - inst.level) * mu)
    if inst.measure is Measure.BETA:
        lp.le({B[t]: 1.0 for t in ends}, (1.0 - inst.level) * float(d.sum()))

    # orders are nonnegative in expectation
    for r in reviews:
        pc, pk = expected_level(r - 1)
        row = {L[r]: 1.0}
        for k, v in pc.items():
            row[k] = row.get(k, 0.0) - v
        lp.ge(row, pk)

    if inst.shortage is Shortage.BACKORDER:
        lp.constant = inst.a * len(reviews) - inst.v * inst.I0 + inst.v * float(d.sum())
        for t in range(1, N + 1):
            lp.cost[H[t]] = lp.cost.get(H[t], 0.0) + inst.h
            if inst.measure is Measure.PENALTY:
                lp.cost[B[t]] = lp.cost.get(B[t], 0.0) + inst.b
        ec, ek = expected_level(N)
        lp.constant += inst.v * ek
        for k, v in ec.items():
            lp.cost[k] = lp.cost.get(k, 0.0) + inst.v * v
        return lp, False

    # lost sales: Q_r = S_r - H_{r-1}
    M = lost_sales_big_m(inst)
    s = inst.s or 0.0
    lp.constant = s * inst.I0 - inst.a * len(reviews)
    for r in reviews:
        q_row = {L[r]: 1.0}
        q_const = 0.0
        if r == 1:
            q_const = -max(inst.I0, 0.0)
        else:
            q_row[H[r - 1]] = -1.0
        lp.ge(q_row, -q_const)                     # Q_r >= 0
        lp.le(q_row, M + (-q_const))               # Q_r <= M
        if not tight_reorder:
            # S_r - E[I_{r-1}] <= M * Q_r
            pc, pk = expected_level(r - 1)
            row = {L[r]: 1.0 - M}
            for k, v in pc.items():
                row[k] = row.get(k, 0.0) - v
            for k, v in q_row.items():
                if k != L[r]:
                    row[k] = row.get(k, 0.0) - M * v
            lp.le(row, pk + M * q_const)
        for k, v in q_row.items():
            lp.cost[k] = lp.cost.get(k, 0.0) + inst.margin * v
        lp.constant += inst.margin * q_const
    for t in range(1, N + 1):
        lp.cost[H[t]] = lp.cost.get(H[t], 0.0) - inst.h
    lp.cost[H[N]] -= s
    if inst.measure is Measure.PENALTY:
        charged = ends if inst.penalty_basis is PenaltyBasis.PER_UNIT_SHORT else range(1, N + 1)
        for t in charged:
            lp.cost[B[t]] = lp.cost.get(B[t], 0.0) - inst.b
    return lp, True


def enumerate_schedules_oracle(inst: LotSizingInstance, variant, lins, *, tight_reorder=False):
    """Best objective over all ``2^N`` review schedules and its policy.

    Returns ``(objective, policy)``; infeasible instances give
    ``(+inf, None)`` for cost models and ``(-inf, None)`` for profit models.
    """
    if not isinstance(variant, ModelVariant):
        variant = inst.variant(Direction.parse(variant))
    N = inst.N
    if N > MAX_ORACLE_PERIODS:
        raise ValueError(f"schedule enumeration is limited to N <= {MAX_ORACLE_PERIODS} (got {N})")
    maximize = variant.maximize
    best_val = -math.inf if maximize else math.inf
    best_policy = None
    d = inst.expected_demand()
    for bits in itertools.product((0, 1), repeat=N):
        reviews = [t + 1 for t, b in enumerate(bits) if b]
        built, is_max = _schedule_lp(inst, variant, lins, reviews, tight_reorder)
        if built is None:
            continue
        val, x = built.solve(is_max)
        if val is None:
            continue
        if (maximize and val > best_val + 1e-9) or (not maximize and val < best_val - 1e-9):
            best_val = val
            best_policy = Policy({r: float(x[built.names.index(f"S[{r}]")]) for r in reviews})
    return best_val, best_policy
