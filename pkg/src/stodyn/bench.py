"""Test-bed generation and the gap-versus-segments study.

Pattern means are regenerated from simple formulas (the original series are
only available as a figure).  The EMP vectors are fixed constants so studies
are reproducible; they are stand-ins, not the original empirical data.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluate import exact_policy_cost, optimality_gap
from .linloss import (
    SearchConfig, linearize_process, normal_process_linearization, optimize_partition,
    standard_normal_table, uniform_partition,
)
from .models import (
    ConfigurationError, Direction, LotSizingInstance, Measure, Shortage, SolverConfig, Status,
    build_model, extract_policy, solve,
)
from .probdist import DemandProcess, DomainError, Exponential, Normal, Poisson, Uniform

log = logging.getLogger(__name__)

PATTERNS = ("LCY1", "LCY2", "SIN1", "SIN2", "STA", "RAND", "EMP1", "EMP2", "EMP3", "EMP4")

EMPIRICAL = {
    "EMP1": (47, 81, 155, 185, 168, 131, 111, 94, 120, 138, 174, 190, 158, 96, 58),
    "EMP2": (185, 132, 94, 71, 68, 108, 153, 176, 147, 98, 70, 84, 131, 162, 119),
    "EMP3": (92, 108, 74, 136, 181, 103, 59, 127, 164, 88, 143, 199, 112, 67, 95),
    "EMP4": (38, 52, 71, 104, 153, 197, 182, 141, 115, 102, 96, 123, 161, 134, 87),
}

CSV_COLUMNS = (
    "instance_id", "pattern", "a", "v", "measure", "level", "cv", "shortage", "W",
    "partition_strategy", "lb_objective", "ub_objective", "gap", "exact_cost_of_ub_policy",
    "build_ms", "solve_ms", "status",
)
SUMMARY_COLUMNS = ("measure", "shortage", "partition_strategy", "W", "n", "n_optimal",
                   "median_gap", "q1_gap", "q3_gap", "median_solve_ms")


@dataclass(frozen=True)
class TestBedConfig:
    """Full-factorial test bed.

    ``levels`` are service targets, or penalty costs ``b`` when the measure
    is ``penalty``.  The defaults reproduce the 810-instance grid.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    patterns: tuple = PATTERNS
    N: int = 15
    a_levels: tuple = (500.0, 1000.0, 2000.0)
    v_levels: tuple = (2.0, 5.0, 10.0)
    levels: tuple = (0.8, 0.9, 0.95)
    cv_levels: tuple = (0.1, 0.2, 0.3)
    measure: str = "alpha"
    shortage: str = "backorder"
    base_mean: float = 100.0
    margin: float = 10.0  # lost sales: s = v + margin
    h: float = 1.0
    seed: int = 0

    def validate(self):
        for name in ("patterns", "a_levels", "v_levels", "levels", "cv_levels"):
            if len(getattr(self, name)) == 0:
                raise ConfigurationError(f"factor list {name} is empty")
        unknown = set(self.patterns) - set(PATTERNS)
        if unknown:
            raise ConfigurationError(f"unknown patterns {sorted(unknown)}")
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        Measure(self.measure)
        Shortage(self.shortage)

    @property
    def size(self) -> int:
        return (len(self.patterns) * len(self.a_levels) * len(self.v_levels)
                * len(self.levels) * len(self.cv_levels))


def pattern_means(pattern: str, N: int = 15, base: float = 100.0, seed: int = 0) -> np.ndarray:
    """Expected demand per period for a named pattern."""
    t = np.arange(1, N + 1, dtype=float)
    if pattern == "STA":
        return np.full(N, base)
    if pattern in ("LCY1", "LCY2"):
        # asymmetric hump between 0.3*base and 1.7*base
        peak = max(1.0, round(N / 3)) if pattern == "LCY1" else max(1.0, round(2 * N / 3))
        rise = np.clip((t - 1) / max(peak - 1, 1), 0, 1)
        fall = np.clip((N - t) / max(N - peak, 1), 0, 1)
        shape = np.where(t <= peak, rise, fall)
        return base * (0.3 + 1.4 * shape)
    if pattern in ("SIN1", "SIN2"):
        cycles = 1 if pattern == "SIN1" else 2
        return base * (1.0 + 0.5 * np.sin(2 * np.pi * cycles * (t - 1) / N))
    if pattern == "RAND":
        rng = np.random.default_rng(seed)
        return np.round(rng.uniform(0.2 * base, 1.8 * base, N), 2)
    if pattern in EMPIRICAL:
        return np.resize(np.array(EMPIRICAL[pattern], dtype=float), N) * base / 100.0
    raise ConfigurationError(f"unknown pattern {pattern!r}")


def _fmt(x) -> str:
    return f"{x:g}"


def generate_testbed(cfg: TestBedConfig) -> list[LotSizingInstance]:
    """Instances in factorial order, each tagged with its factor coordinates."""
    cfg.validate()
    measure = Measure(cfg.measure)
    shortage = Shortage(cfg.shortage)
    out = []
    for pattern, a, v, level, cv in itertools.product(
            cfg.patterns, cfg.a_levels, cfg.v_levels, cfg.levels, cfg.cv_levels):
        means = pattern_means(pattern, cfg.N, cfg.base_mean, cfg.seed)
        demand = DemandProcess([Normal(float(m), float(cv * m)) for m in means])
        kw = {"b": float(level)} if measure is Measure.PENALTY else {"level": float(level)}
        if shortage is Shortage.LOST_SALES:
            kw["s"] = float(v + cfg.margin)
        iid = f"{pattern}-a{_fmt(a)}-v{_fmt(v)}-l{_fmt(level)}-cv{_fmt(cv)}"
        tags = {"pattern": pattern, "a": a, "v": v, "level": level, "cv": cv}
        out.append(LotSizingInstance(demand, a=float(a), v=float(v), h=cfg.h, measure=measure,
                                     shortage=shortage, name=iid, tags=tags, **kw))
    return out


def heterogeneous_process(N: int, means) -> DemandProcess:
    """Rotation normal(cv 0.3), Poisson, exponential, uniform[0, 2 mean]."""
    means = [float(m) for m in means]
    if len(means) != N:
        raise DomainError(f"expected {N} means, got {len(means)}")
    laws = []
    for k, m in enumerate(means):
        if not m > 0:
            raise DomainError(f"period {k + 1}: mean must be positive, got {m}")
        kind = k % 4
        if kind == 0:
            laws.append(Normal(m, 0.3 * m))
        elif kind == 1:
            laws.append(Poisson(m))
        elif kind == 2:
            laws.append(Exponential(m))
        else:
            laws.append(Uniform(0.0, 2.0 * m))
    return DemandProcess(laws)


# ---------------------------------------------------------------------------
# studies


def linearizations_for(inst: LotSizingInstance, W: int, strategy: str, search: SearchConfig | None = None):
    process = inst.demand
    if strategy == "table":
        if not all(isinstance(d, Normal) for d in process.periods):
            raise ConfigurationError("the table strategy needs normally distributed demand")
        return normal_process_linearization(process, standard_normal_table(W))
    if strategy == "uniform":
        return linearize_process(process, uniform_partition(W))
    if strategy == "search":
        laws = [process.convolution(j, t).law for t in range(1, inst.N + 1) for j in range(1, t + 1)]
        return linearize_process(process, optimize_partition(laws, W, search))
    raise ConfigurationError(f"unknown partition strategy {strategy!r}")


def default_strategy(inst: LotSizingInstance) -> str:
    return "table" if all(isinstance(d, Normal) for d in inst.demand.periods) else "uniform"


def solve_bounds(inst: LotSizingInstance, lins, solver: SolverConfig | None = None, evaluate=True) -> dict:
    """Solve both directions; returns objectives, policies, timings and statuses."""
    out = {"build_ms": 0.0, "solve_ms": 0.0}
    for direction in (Direction.LOWER, Direction.UPPER):
        key = "lb" if direction is Direction.LOWER else "ub"
        t0 = time.perf_counter()
        model = build_model(inst, lins, direction)
        t1 = time.perf_counter()
        sol = solve(model, solver)
        t2 = time.perf_counter()
        out["build_ms"] += 1e3 * (t1 - t0)
        out["solve_ms"] += 1e3 * (t2 - t1)
        out[f"{key}_status"] = sol.status
        out[f"{key}_objective"] = sol.objective if sol.optimal else None
        out[f"{key}_policy"] = extract_policy(sol, inst) if sol.optimal else None
    statuses = [out["lb_status"], out["ub_status"]]
    worst = next((s for s in (Status.ERROR, Status.INFEASIBLE, Status.LIMIT) if s in statuses), Status.OPTIMAL)
    out["status"] = worst
    out["gap"] = None
    out["exact_ub_policy"] = None
    if worst is Status.OPTIMAL:
        # in both senses the lower-bound direction gives the smaller objective
        out["gap"] = optimality_gap(out["lb_objective"], out["ub_objective"])
    if evaluate and out["ub_policy"] is not None:
        out["exact_ub_policy"] = exact_policy_cost(out["ub_policy"], inst).objective
    return out


def _cell_rows(inst, W_list, strategies, solver, search, evaluate):
    rows = []
    for strategy in strategies:
        for W in W_list:
            row = {
                "instance_id": inst.name, "pattern": inst.tags.get("pattern", ""),
                "a": inst.a, "v": inst.v, "measure": inst.measure.value,
                "level": inst.b if inst.measure is Measure.PENALTY else inst.level,
                "cv": inst.tags.get("cv", ""), "shortage": inst.shortage.value, "W": W,
                "partition_strategy": strategy,
            }
            try:
                lins = linearizations_for(inst, W, strategy, search)
                res = solve_bounds(inst, lins, solver, evaluate)
            except Exception as exc:  # one bad cell must not abort the study
                log.warning("cell %s W=%s %s failed: %s", inst.name, W, strategy, exc)
                row.update(lb_objective=None, ub_objective=None, gap=None, exact_cost_of_ub_policy=None,
                           build_ms=None, solve_ms=None, status=Status.ERROR.value)
                rows.append(row)
                continue
            row.update(lb_objective=res["lb_objective"], ub_objective=res["ub_objective"], gap=res["gap"],
                       exact_cost_of_ub_policy=res["exact_ub_policy"], build_ms=res["build_ms"],
                       solve_ms=res["solve_ms"], status=res["status"].value)
            rows.append(row)
    return rows


def _row_key(row):
    return (row["measure"], row["shortage"], row["instance_id"], row["partition_strategy"], int(row["W"]))


def run_gap_study(instances, W_list=(2, 3, 4, 7, 11), strategies=None, solver: SolverConfig | None = None,
                  *, search: SearchConfig | None = None, workers: int = 1, evaluate: bool = True) -> list[dict]:
    """Solve LB and UB models for every (instance, strategy, W) cell.

    ``strategies`` defaults to the table for all-normal instances and the
    uniform partition otherwise.  Rows are sorted by cell key.
    """
    instances = list(instances)
    W_list = list(W_list)
    if not instances or not W_list:
        raise ConfigurationError("the gap study needs instances and segment counts")
    names = [i.name for i in instances]
    if len(set(names)) != len(names):
        raise ConfigurationError("instance names must be unique")

    def job(inst):
        strats = strategies or (default_strategy(inst),)
        return _cell_rows(inst, W_list, strats, solver, search, evaluate)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, instances))
    else:
        chunks = [job(inst) for inst in instances]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=_row_key)
    return rows


def summarize(rows) -> list[dict]:
    """Per (cell, strategy, W): median and quartile gaps over optimal rows."""
    groups = {}
    for r in rows:
        key = (r["measure"], r["shortage"], r["partition_strategy"], int(r["W"]))
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        gaps = np.array([float(r["gap"]) for r in rs if r["status"] == Status.OPTIMAL.value])
        times = np.array([float(r["solve_ms"]) for r in rs if r["solve_ms"] not in (None, "")])
        q1, med, q3 = (np.percentile(gaps, [25, 50, 75]) if gaps.size else (math.nan,) * 3)
        out.append(dict(zip(SUMMARY_COLUMNS, (
            *key, len(rs), int(gaps.size), float(med), float(q1), float(q3),
            float(np.median(times)) if times.size else math.nan))))
    return out


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(rows, path, columns=CSV_COLUMNS):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
