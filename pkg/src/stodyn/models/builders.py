"""Certainty-equivalent MILP models, one per (measure, shortage, direction).

Variables (all indexed by period ``t = 1..N``):

``I[t]``       expected closing inventory level (free)
``delta[t]``   review in period t
``P[j,t]``     the cycle covering t started at period j
``Ilb/Iub[t]`` bound of the expected on-hand stock ``E[max(I_t, 0)]``
``Blb/Bub[t]`` bound of the expected shortage ``E[max(-I_t, 0)]``
``Clb/Cub[t]`` shortage at t if t closes a cycle, else 0
``Q[t]``       expected order quantity (lost sales)

Before the first review the cycle is taken to start in period 1 with
level ``I0``, so ``P[1,t]`` is forced until a later review happens.
"""

from __future__ import annotations

import math

import numpy as np

from ..linloss import LinearizationSet
from .instance import (
    ConfigurationError, Direction, LotSizingInstance, Measure, ModelVariant,
    PenaltyBasis, Shortage,
)
from .milp import MilpModel

BIG_M_QUANTILE = 0.9999


class ModelConstructionError(ValueError):
    pass


def order_big_m(inst: LotSizingInstance) -> np.ndarray:
    """Per-period bound on the order amount ``I_t + d_t - I_{t-1}``.

    Covers backorders carried into t plus the order-up-to level of any
    cycle starting at t.
    """
    means = inst.expected_demand()
    q_hi = np.array([float(d.quantile(BIG_M_QUANTILE)) for d in inst.demand.periods])
    base = max(-inst.I0, 0.0)
    N = inst.N
    return np.array([base + means[:t - 1].sum() + np.maximum(q_hi[t - 1:], means[t - 1:]).sum()
                     for t in range(1, N + 1)])


def lost_sales_big_m(inst: LotSizingInstance) -> float:
    q_hi = np.array([float(d.quantile(BIG_M_QUANTILE)) for d in inst.demand.periods])
    return abs(inst.I0) + 2.0 * float(np.maximum(q_hi, inst.expected_demand()).sum()) + 1.0


def cycle_big_m(inst: LotSizingInstance, lins: LinearizationSet) -> np.ndarray:
    """Bound on the expected shortage at the end of period t."""
    means = inst.expected_demand()
    N = inst.N
    out = []
    for t in range(1, N + 1):
        err = max(lins[(j, t)].max_error for j in range(1, t + 1))
        out.append(max(-inst.I0, 0.0) + means[:t].sum() + err + 1.0)
    return np.array(out)


def _check_lins(inst, lins):
    if not isinstance(lins, LinearizationSet):
        lins = LinearizationSet(next(iter(lins.values())).partition, lins)
    N = inst.N
    W = None
    for t in range(1, N + 1):
        for j in range(1, t + 1):
            lin = lins.get((j, t))
            if lin is None:
                raise ModelConstructionError(f"missing linearisation for range ({j}, {t})")
            if W is None:
                W = lin.W
            elif lin.W != W:
                raise ModelConstructionError("all linearisations must share one partition size")
    return lins


class _Builder:
    """Shared assembly steps; the public ``build_*`` functions compose them."""

    def __init__(self, inst: LotSizingInstance, lins, variant: ModelVariant, *, tight_reorder=False):
        self.inst = inst
        self.lins = _check_lins(inst, lins)
        self.variant = variant
        self.N = inst.N
        self.means = inst.expected_demand()
        self.tag = "lb" if variant.optimistic else "ub"
        self.tight_reorder = tight_reorder
        self.m = MilpModel(
            f"{variant.cell}/{variant.direction.value}/W{self.lins.W}", maximize=variant.maximize)
        self.m.meta.update(variant=variant, W=self.lins.W)
        self.mu = {(j, t): inst.demand.mean_range(j, t)
                   for t in range(1, self.N + 1) for j in range(1, t + 1)}

    # -- variables -------------------------------------------------------
    def core(self):
        m, N = self.m, self.N
        for t in range(1, N + 1):
            m.add_var(f"I[{t}]", lb=-math.inf)
        for t in range(1, N + 1):
            m.add_var(f"delta[{t}]", binary=True)
        for t in range(1, N + 1):
            for j in range(1, t + 1):
                m.add_var(f"P[{j},{t}]", binary=True)
        for t in range(1, N + 1):
            m.add_var(f"I{self.tag}[{t}]")

    def cycle_assignment(self):
        m, N = self.m, self.N
        for t in range(1, N + 1):
            m.add_eq({f"P[{j},{t}]": 1.0 for j in range(1, t + 1)}, 1.0, family="cycle_sum")
            for j in range(1, t + 1):
                row = {f"P[{j},{t}]": 1.0}
                for k in range(j + 1, t + 1):
                    row[f"delta[{k}]"] = 1.0
                if j == 1:
                    # period 1 always opens a cycle (with level I0 if no order)
                    m.add_ge(row, 1.0, family="cycle_link")
                else:
                    row[f"delta[{j}]"] = -1.0
                    m.add_ge(row, 0.0, family="cycle_link")

    def prev_level(self, t):
        """(coefs, constant) of ``I_{t-1}``."""
        if t == 1:
            return {}, self.inst.I0
        return {f"I[{t - 1}]": 1.0}, 0.0

    def conservation(self):
        m, N = self.m, self.N
        M = order_big_m(self.inst)
        m.big_m["order"] = float(M.max())
        for t in range(1, N + 1):
            prev, const = self.prev_level(t)
            row = {f"I[{t}]": 1.0}
            for k, c in prev.items():
                row[k] = row.get(k, 0.0) - c
            # I_t + d_t - I_{t-1} >= 0
            m.add_ge(row, const - self.means[t - 1], family="conservation")
            if self.variant.shortage is Shortage.BACKORDER:
                m.add_le({**row, f"delta[{t}]": -M[t - 1]}, const - self.means[t - 1], family="reorder")

    def alpha(self):
        m, N, inst = self.m, self.N, self.inst
        for t in range(1, N + 1):
            row = {f"I[{t}]": 1.0}
            for j in range(1, t + 1):
                q = float(inst.demand.convolution(j, t).law.quantile(inst.level))
                row[f"P[{j},{t}]"] = -(q - self.mu[(j, t)])
            m.add_ge(row, 0.0, family="alpha")

    def _segment_rows(self, target, shift_by_level, family, floor_family):
        """``target_t >= [-I_t] + (I_t + sum_j mu_jt P_jt) c_i - sum_j (A_i^jt [- e^jt]) P_jt``."""
        m, N = self.m, self.N
        upper = self.tag == "ub"
        for t in range(1, N + 1):
            lins = {j: self.lins[(j, t)] for j in range(1, t + 1)}
            slopes = lins[1].slopes
            intercepts = {j: lin.intercepts for j, lin in lins.items()}
            for i in range(len(slopes)):
                c = float(slopes[i])
                row = {f"{target}[{t}]": 1.0, f"I[{t}]": -c + (1.0 if shift_by_level else 0.0)}
                for j, lin in lins.items():
                    coef = c * self.mu[(j, t)] - float(intercepts[j][i])
                    if upper:
                        coef += lin.max_error
                    row[f"P[{j},{t}]"] = -coef
                m.add_ge(row, 0.0, family=family)
            # zeroth segment
            row = {f"{target}[{t}]": 1.0}
            if shift_by_level:
                row[f"I[{t}]"] = 1.0
            if upper:
                for j, lin in lins.items():
                    row[f"P[{j},{t}]"] = -lin.max_error
            if len(row) > 1:
                m.add_ge(row, 0.0, family=floor_family)

    def holding_bounds(self):
        self._segment_rows(f"I{self.tag}", False, "hold_piecewise", "hold_floor")

    def shortage_bounds(self):
        m = self.m
        for t in range(1, self.N + 1):
            m.add_var(f"B{self.tag}[{t}]")
        self._segment_rows(f"B{self.tag}", True, "short_piecewise", "short_floor")

    def cycle_fill_rate(self):
        m, inst = self.m, self.inst
        cap = 1.0 - inst.level
        for t in range(1, self.N + 1):
            row = {f"B{self.tag}[{t}]": 1.0}
            for j in range(1, t + 1):
                row[f"P[{j},{t}]"] = -cap * self.mu[(j, t)]
            m.add_le(row, 0.0, family="cycle_fill_rate")

    def cycle_end_shortage(self):
        """``C_t >= B_t - (1 - delta_{t+1}) M_t``, ``C_N = B_N``."""
        m, N = self.m, self.N
        M = cycle_big_m(self.inst, self.lins)
        m.big_m["cycle"] = float(M.max())
        for t in range(1, N + 1):
            m.add_var(f"C{self.tag}[{t}]")
        for t in range(1, N):
            m.add_ge({f"C{self.tag}[{t}]": 1.0, f"B{self.tag}[{t}]": -1.0, f"delta[{t + 1}]": -M[t - 1]},
                     -M[t - 1], family="cycle_end")
        m.add_eq({f"C{self.tag}[{N}]": 1.0, f"B{self.tag}[{N}]": -1.0}, 0.0, family="cycle_end")

    def horizon_fill_rate(self):
        cap = (1.0 - self.inst.level) * float(self.means.sum())
        self.m.add_le({f"C{self.tag}[{t}]": 1.0 for t in range(1, self.N + 1)}, cap, family="fill_rate")

    def cost_objective(self, with_penalty):
        m, inst, N = self.m, self.inst, self.N
        m.constant = -inst.v * inst.I0 + inst.v * float(self.means.sum())
        obj = {f"I[{N}]": inst.v}
        for t in range(1, N + 1):
            obj[f"delta[{t}]"] = inst.a
            obj[f"I{self.tag}[{t}]"] = inst.h
            if with_penalty:
                obj[f"B{self.tag}[{t}]"] = inst.b
        m.add_objective(obj)

    # -- lost sales ------------------------------------------------------
    def lost_sales_orders(self):
        m, inst, N = self.m, self.inst, self.N
        M = lost_sales_big_m(inst)
        m.big_m["lost_sales"] = M
        for t in range(1, N + 1):
            m.add_var(f"Q[{t}]")
        hold = f"I{self.tag}"
        for t in range(1, N + 1):
            # expr = I_t + d_t - H_{t-1}
            expr = {f"I[{t}]": 1.0}
            const = self.means[t - 1]
            if t == 1:
                const -= max(inst.I0, 0.0)
            else:
                expr[f"{hold}[{t - 1}]"] = -1.0
            # Q_t >= expr - (1 - delta_t) M ;  Q_t <= expr + (1 - delta_t) M
            lo = {f"Q[{t}]": 1.0, f"delta[{t}]": -M}
            hi = {f"Q[{t}]": 1.0, f"delta[{t}]": M}
            for k, c in expr.items():
                lo[k] = lo.get(k, 0.0) - c
                hi[k] = hi.get(k, 0.0) - c
            m.add_ge(lo, const - M, family="order_link")
            m.add_le(hi, const + M, family="order_link")
            # an order only when Q_t > 0, and Q_t only at reviews
            prev, pconst = self.prev_level(t)
            amount = {f"I[{t}]": 1.0}
            for k, c in prev.items():
                amount[k] = amount.get(k, 0.0) - c
            if self.tight_reorder:
                amount[f"delta[{t}]"] = -M
            else:
                amount[f"Q[{t}]"] = -M
            m.add_le(amount, pconst - self.means[t - 1], family="reorder")
            m.add_le({f"Q[{t}]": 1.0, f"delta[{t}]": -M}, 0.0, family="order_gate")

    def profit_objective(self, penalty_on):
        m, inst, N = self.m, self.inst, self.N
        m.constant = (inst.s or 0.0) * inst.I0
        hold = f"I{self.tag}"
        obj = {}
        for t in range(1, N + 1):
            obj[f"Q[{t}]"] = inst.margin
            obj[f"delta[{t}]"] = -inst.a
            obj[f"{hold}[{t}]"] = -inst.h
            if penalty_on is not None:
                obj[f"{penalty_on}[{t}]"] = -inst.b
        obj[f"{hold}[{N}]"] = obj[f"{hold}[{N}]"] - (inst.s or 0.0)
        m.add_objective(obj)


def _builder(inst, lins, direction, expected_shortage, **kw):
    variant = inst.variant(direction)
    if variant.shortage is not expected_shortage:
        raise ConfigurationError(
            f"instance is {variant.shortage.value}, builder handles {expected_shortage.value}")
    return _Builder(inst, lins, variant, **kw)


def _require(inst, measure):
    if inst.measure is not measure:
        raise ConfigurationError(f"instance measure is {inst.measure.value}, expected {measure.value}")


def _backorder_skeleton(b):
    b.core()
    b.cycle_assignment()
    b.conservation()
    b.holding_bounds()


def build_alpha_model(inst: LotSizingInstance, lins, direction=Direction.LOWER) -> MilpModel:
    _require(inst, Measure.ALPHA)
    b = _builder(inst, lins, direction, Shortage.BACKORDER)
    _backorder_skeleton(b)
    b.alpha()
    b.cost_objective(with_penalty=False)
    return b.m


def build_penalty_model(inst: LotSizingInstance, lins, direction=Direction.LOWER) -> MilpModel:
    _require(inst, Measure.PENALTY)
    b = _builder(inst, lins, direction, Shortage.BACKORDER)
    _backorder_skeleton(b)
    b.shortage_bounds()
    b.cost_objective(with_penalty=True)
    return b.m


def build_beta_cyc_model(inst: LotSizingInstance, lins, direction=Direction.LOWER) -> MilpModel:
    _require(inst, Measure.BETA_CYC)
    b = _builder(inst, lins, direction, Shortage.BACKORDER)
    _backorder_skeleton(b)
    b.shortage_bounds()
    b.cycle_fill_rate()
    b.cost_objective(with_penalty=False)
    return b.m


def build_beta_model(inst: LotSizingInstance, lins, direction=Direction.LOWER) -> MilpModel:
    _require(inst, Measure.BETA)
    b = _builder(inst, lins, direction, Shortage.BACKORDER)
    _backorder_skeleton(b)
    b.shortage_bounds()
    b.cycle_end_shortage()
    b.horizon_fill_rate()
    b.cost_objective(with_penalty=False)
    return b.m


def build_lost_sales_model(inst: LotSizingInstance, lins, variant: ModelVariant | str | None = None,
                           *, tight_reorder: bool = False) -> MilpModel:
    """Expected-profit model under lost sales for any service measure.

    ``variant`` may be a :class:`ModelVariant` or just a direction; the
    profit upper bound uses the Jensen bounds, the lower bound the
    Edmundson-Madanski ones.
    """
    if isinstance(variant, ModelVariant):
        if variant.shortage is not Shortage.LOST_SALES or variant.measure is not inst.measure:
            raise ConfigurationError(f"variant {variant} does not match the instance")
        if variant.penalty_basis is not inst.penalty_basis:
            raise ConfigurationError("variant and instance disagree on the penalty basis")
        direction = variant.direction
    else:
        direction = Direction.UPPER if variant is None else variant
    b = _builder(inst, lins, direction, Shortage.LOST_SALES, tight_reorder=tight_reorder)
    b.core()
    b.cycle_assignment()
    b.conservation()
    b.lost_sales_orders()
    b.holding_bounds()
    penalty_on = None
    measure = inst.measure
    if measure is Measure.ALPHA:
        b.alpha()
    elif measure is Measure.PENALTY:
        b.shortage_bounds()
        if inst.penalty_basis is PenaltyBasis.PER_UNIT_SHORT:
            b.cycle_end_shortage()
            penalty_on = f"C{b.tag}"
        else:
            penalty_on = f"B{b.tag}"
    elif measure is Measure.BETA_CYC:
        b.shortage_bounds()
        b.cycle_fill_rate()
    else:
        b.shortage_bounds()
        b.cycle_end_shortage()
        b.horizon_fill_rate()
    b.profit_objective(penalty_on)
    return b.m


_BACKORDER = {
    Measure.ALPHA: build_alpha_model,
    Measure.PENALTY: build_penalty_model,
    Measure.BETA_CYC: build_beta_cyc_model,
    Measure.BETA: build_beta_model,
}


def build_model(inst: LotSizingInstance, lins, direction=Direction.LOWER, **kw) -> MilpModel:
    """Dispatch on the instance's (measure, shortage) cell."""
    if inst.shortage is Shortage.LOST_SALES:
        return build_lost_sales_model(inst, lins, Direction.parse(direction), **kw)
    return _BACKORDER[inst.measure](inst, lins, direction)
