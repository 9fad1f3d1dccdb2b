"""A small linear-model container and the solver adapter.

Models are assembled row by row with named variables, then handed to a
branch-and-bound engine.  The only adapter shipped is HiGHS through
:func:`scipy.optimize.milp`; the ``STODYN_SOLVER`` environment variable
selects the adapter and ``STODYN_TIME_LIMIT`` overrides the time limit.
"""

from __future__ import annotations

import math
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize, sparse


class SolverUnavailable(EnvironmentError):
    pass


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    LIMIT = "limit"
    ERROR = "error"


@dataclass
class Row:
    coefs: dict
    lo: float
    hi: float
    family: str
    name: str


class MilpModel:
    """Variables with bounds and integrality, linear rows ``lo <= a.x <= hi``."""

    def __init__(self, name: str = "model", maximize: bool = False):
        self.name = name
        self.maximize = maximize
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integer: list[bool] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.constant = 0.0
        self.big_m: dict[str, float] = {}
        self.meta: dict = {}

    # -- building --------------------------------------------------------
    def add_var(self, name, lb=0.0, ub=math.inf, binary=False) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        k = len(self.names)
        self.names.append(name)
        self.index[name] = k
        if binary:
            lb, ub = 0.0, 1.0
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(binary))
        return k

    def var(self, name) -> int:
        return self.index[name]

    def has(self, name) -> bool:
        return name in self.index

    def add_row(self, coefs, lo=-math.inf, hi=math.inf, family="", name=None):
        clean: dict[int, float] = {}
        for k, c in coefs.items():
            k = self.index[k] if isinstance(k, str) else k
            if c:
                clean[k] = clean.get(k, 0.0) + float(c)
        if name is None:
            name = f"{family}_{len(self.rows)}"
        self.rows.append(Row(clean, float(lo), float(hi), family, name))

    def add_ge(self, coefs, rhs, family="", name=None):
        self.add_row(coefs, lo=rhs, family=family, name=name)

    def add_le(self, coefs, rhs, family="", name=None):
        self.add_row(coefs, hi=rhs, family=family, name=name)

    def add_eq(self, coefs, rhs, family="", name=None):
        self.add_row(coefs, lo=rhs, hi=rhs, family=family, name=name)

    def add_objective(self, coefs):
        for k, c in coefs.items():
            k = self.index[k] if isinstance(k, str) else k
            self.objective[k] = self.objective.get(k, 0.0) + float(c)

    # -- inspection --------------------------------------------------------
    @property
    def n_vars(self):
        return len(self.names)

    def count(self, prefix: str) -> int:
        return sum(1 for n in self.names if n.startswith(prefix + "["))

    def n_binaries(self) -> int:
        return sum(self.integer)

    def families(self) -> Counter:
        return Counter(r.family for r in self.rows)

    def rows_of(self, family: str) -> list[Row]:
        return [r for r in self.rows if r.family == family]

    def arrays(self):
        n = self.n_vars
        data, ri, ci = [], [], []
        for i, r in enumerate(self.rows):
            for k, c in r.coefs.items():
                data.append(c)
                ri.append(i)
                ci.append(k)
        A = sparse.csr_array((data, (ri, ci)), shape=(len(self.rows), n))
        lo = np.array([r.lo for r in self.rows])
        hi = np.array([r.hi for r in self.rows])
        c = np.zeros(n)
        for k, v in self.objective.items():
            c[k] = v
        return c, A, lo, hi

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.constant + sum(c * x[k] for k, c in self.objective.items())

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        worst = 0.0
        lb, ub = np.array(self.lb), np.array(self.ub)
        worst = max(worst, float(np.max(np.maximum(lb - x, 0.0), initial=0.0)))
        worst = max(worst, float(np.max(np.maximum(x - ub, 0.0), initial=0.0)))
        if self.rows:
            _, A, lo, hi = self.arrays()
            ax = A @ x
            worst = max(worst, float(np.max(np.maximum(lo - ax, 0.0))), float(np.max(np.maximum(ax - hi, 0.0))))
        integ = np.array(self.integer)
        if integ.any():
            worst = max(worst, float(np.max(np.abs(x[integ] - np.round(x[integ])))))
        return worst

    def fixed(self, values: dict) -> "MilpModel":
        """Copy with some variables fixed (by name)."""
        out = MilpModel(self.name, self.maximize)
        out.__dict__.update({k: (list(v) if isinstance(v, list) else v) for k, v in self.__dict__.items()})
        out.rows = list(self.rows)
        out.objective = dict(self.objective)
        for name, value in values.items():
            k = self.index[name]
            out.lb[k] = out.ub[k] = float(value)
        return out

    # -- export ----------------------------------------------------------
    def to_lp(self) -> str:
        """CPLEX LP text format."""
        def term(c, name, first):
            sign = "-" if c < 0 else ("" if first else "+")
            mag = abs(c)
            return f"{sign} {mag:.12g} {name}" if not first or sign else f"{mag:.12g} {name}"

        def expr(coefs):
            if not coefs:
                return "0 " + self.names[0] if self.names else "0"
            parts = [term(c, self._lp_name(k), i == 0) for i, (k, c) in enumerate(sorted(coefs.items()))]
            return " ".join(parts)

        out = ["\\ " + self.name, "Maximize" if self.maximize else "Minimize"]
        out.append(" obj: " + expr(self.objective) + (f" + {self.constant:.12g} constant" if self.constant else ""))
        out.append("Subject To")
        for r in self.rows:
            e = expr(r.coefs)
            if r.lo == r.hi:
                out.append(f" {r.name}: {e} = {r.lo:.12g}")
            else:
                if r.lo > -math.inf:
                    out.append(f" {r.name}_lo: {e} >= {r.lo:.12g}")
                if r.hi < math.inf:
                    out.append(f" {r.name}_hi: {e} <= {r.hi:.12g}")
        out.append("Bounds")
        if self.constant:
            out.append(" constant = 1")
        for k, n in enumerate(self.names):
            if self.integer[k]:
                continue
            lo, hi = self.lb[k], self.ub[k]
            ln = self._lp_name(k)
            if lo == -math.inf and hi == math.inf:
                out.append(f" {ln} free")
            elif hi == math.inf:
                if lo != 0.0:
                    out.append(f" {ln} >= {lo:.12g}")
            else:
                out.append(f" {lo:.12g} <= {ln} <= {hi:.12g}")
        bins = [self._lp_name(k) for k in range(self.n_vars) if self.integer[k]]
        if bins:
            out.append("Binary")
            out.extend(" " + b for b in bins)
        out.append("End")
        return "\n".join(out) + "\n"

    def _lp_name(self, k):
        return self.names[k].replace("[", "(").replace("]", ")").replace(",", "_")

    def __repr__(self):
        return f"MilpModel({self.name!r}, vars={self.n_vars}, rows={len(self.rows)}, binaries={self.n_binaries()})"


@dataclass
class SolverConfig:
    time_limit: float = 120.0
    mip_rel_gap: float = 1e-7
    adapter: str | None = None
    check_tolerance: float = 1e-6

    def resolved(self) -> "SolverConfig":
        out = SolverConfig(self.time_limit, self.mip_rel_gap, self.adapter, self.check_tolerance)
        env_limit = os.environ.get("STODYN_TIME_LIMIT")
        if env_limit:
            out.time_limit = float(env_limit)
        if out.adapter is None:
            out.adapter = os.environ.get("STODYN_SOLVER", "highs")
        return out


@dataclass
class SolverSolution:
    status: Status
    objective: float | None
    x: np.ndarray | None = field(default=None, repr=False)
    names: list = field(default_factory=list, repr=False)
    solve_seconds: float = 0.0
    gap: float | None = None
    message: str = ""
    _lookup: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._lookup = {n: i for i, n in enumerate(self.names)}

    def value(self, name: str) -> float:
        return float(self.x[self._lookup[name]])

    def values(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.x)} if self.x is not None else {}

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


_ADAPTERS = {}


def _highs(model: MilpModel, cfg: SolverConfig) -> SolverSolution:
    c, A, lo, hi = model.arrays()
    sign = -1.0 if model.maximize else 1.0
    constraints = [optimize.LinearConstraint(A, lo, hi)] if A.shape[0] else []
    bounds = optimize.Bounds(np.array(model.lb), np.array(model.ub))
    t0 = time.perf_counter()
    res = optimize.milp(
        sign * c, integrality=np.array(model.integer, dtype=int), bounds=bounds,
        constraints=constraints,
        options={"time_limit": cfg.time_limit, "mip_rel_gap": cfg.mip_rel_gap, "disp": False})
    elapsed = time.perf_counter() - t0
    x = None if res.x is None else np.asarray(res.x, dtype=float)
    if res.status == 0:
        status = Status.OPTIMAL
    elif res.status == 2:
        status = Status.INFEASIBLE
    elif res.status == 1:
        status = Status.LIMIT
    else:
        status = Status.ERROR
    if x is not None:
        integ = np.array(model.integer)
        x[integ] = np.round(x[integ])
    objective = model.evaluate(x) if x is not None else None
    gap = getattr(res, "mip_gap", None)
    return SolverSolution(status, objective, x, list(model.names), elapsed, gap, str(res.message))


_ADAPTERS["highs"] = _highs
_ADAPTERS["scipy"] = _highs


def solve(model: MilpModel, config: SolverConfig | None = None) -> SolverSolution:
    cfg = (config or SolverConfig()).resolved()
    adapter = _ADAPTERS.get(cfg.adapter.lower())
    if adapter is None:
        raise SolverUnavailable(
            f"unknown MILP adapter {cfg.adapter!r}; set STODYN_SOLVER to one of {sorted(_ADAPTERS)}")
    if model.n_vars == 0:
        return SolverSolution(Status.OPTIMAL, model.constant, np.zeros(0), [], 0.0, 0.0, "empty model")
    return adapter(model, cfg)
