from __future__ import annotations

import numpy as np
import pytest

from stodyn.bench import (
    CSV_COLUMNS, EMPIRICAL, PATTERNS, TestBedConfig, generate_testbed, heterogeneous_process,
    linearizations_for, pattern_means, read_csv, run_gap_study, summarize, write_csv,
)
from stodyn.evaluate import optimality_gap
from stodyn.linloss import SearchConfig, minimax_error, uniform_partition
from stodyn.models import ConfigurationError, LotSizingInstance, SolverConfig
from stodyn.probdist import DemandProcess, DomainError, Exponential, Grid, Normal, Poisson, Uniform


def small_cfg(**kw):
    base = dict(patterns=("STA", "SIN1", "LCY1"), N=5, a_levels=(200.0,), v_levels=(2.0,),
                levels=(0.9,), cv_levels=(0.1, 0.3))
    base.update(kw)
    return TestBedConfig(**base)


# -- test bed -------------------------------------------------------------

def test_full_grid_size():
    cfg = TestBedConfig()
    assert cfg.size == 810
    assert len(generate_testbed(cfg)) == 810
    assert cfg.size == len(PATTERNS) * 3 * 3 * 3 * 3


@pytest.mark.parametrize("field", ["patterns", "a_levels", "v_levels", "levels", "cv_levels"])
def test_empty_factor_rejected(field):
    with pytest.raises(ConfigurationError):
        generate_testbed(TestBedConfig(**{field: ()}))


def test_unknown_pattern_rejected():
    with pytest.raises(ConfigurationError):
        generate_testbed(TestBedConfig(patterns=("ZIGZAG",)))


def test_stationary_pattern():
    cfg = TestBedConfig(patterns=("STA",), a_levels=(500.0,), v_levels=(2.0,), levels=(0.9,), cv_levels=(0.2,))
    (inst,) = generate_testbed(cfg)
    assert inst.N == 15
    assert all(d == Normal(100.0, 20.0) for d in inst.demand.periods)
    assert inst.h == 1.0 and inst.tags == {"pattern": "STA", "a": 500.0, "v": 2.0, "level": 0.9, "cv": 0.2}
    assert inst.name == "STA-a500-v2-l0.9-cv0.2"


def test_testbed_deterministic():
    cfg = TestBedConfig(patterns=("RAND", "LCY2"), seed=4)
    a, b = generate_testbed(cfg), generate_testbed(cfg)
    assert [i.name for i in a] == [i.name for i in b]
    assert all(x.demand.periods == y.demand.periods for x, y in zip(a, b))
    c = generate_testbed(TestBedConfig(patterns=("RAND",), seed=5))
    assert c[0].demand.periods != a[0].demand.periods


def test_pattern_shapes():
    for p in PATTERNS:
        m = pattern_means(p)
        assert m.shape == (15,) and np.all(m > 0)
    lcy1, lcy2 = pattern_means("LCY1"), pattern_means("LCY2")
    assert np.argmax(lcy1) < np.argmax(lcy2)
    assert lcy1.min() == pytest.approx(30) and lcy1.max() == pytest.approx(170)
    assert pattern_means("SIN1").mean() == pytest.approx(100, abs=1e-9)
    assert tuple(pattern_means("EMP3")) == EMPIRICAL["EMP3"]


def test_penalty_and_lost_sales_bed():
    cfg = small_cfg(measure="penalty", levels=(5.0,), shortage="lost_sales")
    inst = generate_testbed(cfg)[0]
    assert inst.b == 5.0 and inst.s == 12.0 and inst.shortage.value == "lost_sales"


# -- heterogeneous processes -------------------------------------------------

def test_heterogeneous_layout():
    p = heterogeneous_process(15, [100.0] * 15)
    assert p[1] == Normal(100, 30)
    assert p[2] == Poisson(100)
    assert p[3] == Exponential(100) and p[3].variance() == pytest.approx(10000)
    assert p[4] == Uniform(0, 200)
    kinds = [type(d).__name__ for d in p.periods]
    assert kinds.count("Uniform") == 3 and kinds.count("Normal") == 4
    with pytest.raises(DomainError):
        heterogeneous_process(2, [10.0, 0.0])
    with pytest.raises(DomainError):
        heterogeneous_process(3, [10.0])


def test_search_strategy_not_worse_than_uniform():
    inst = LotSizingInstance(heterogeneous_process(4, [80, 120, 60, 100]), a=100, measure="penalty", b=5)
    laws = [inst.demand.convolution(j, t).law for t in range(1, 5) for j in range(1, t + 1)]
    search = linearizations_for(inst, 3, "search", SearchConfig(population_size=100, seed=1))
    assert minimax_error(laws, search.partition) <= minimax_error(laws, uniform_partition(3))
    with pytest.raises(ConfigurationError):
        linearizations_for(inst, 3, "table")
    with pytest.raises(ConfigurationError):
        linearizations_for(inst, 3, "bogus")


# -- gap study ------------------------------------------------------------

def test_gap_study_rows_and_invariants():
    rows = run_gap_study(generate_testbed(small_cfg()), W_list=(2, 4, 7))
    assert len(rows) == 6 * 3
    keys = [(r["instance_id"], r["W"]) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert set(CSV_COLUMNS) <= set(r)
        assert r["status"] == "optimal" and r["partition_strategy"] == "table"
        assert r["lb_objective"] <= r["ub_objective"] + 1e-6
        assert r["lb_objective"] - 1e-6 <= r["exact_cost_of_ub_policy"] <= r["ub_objective"] + 1e-6
        assert abs(r["gap"] - optimality_gap(r["lb_objective"], r["ub_objective"])) <= 1e-12
    summary = summarize(rows)
    med = [s["median_gap"] for s in summary]
    assert [s["W"] for s in summary] == [2, 4, 7]
    assert all(b <= a + 1e-12 for a, b in zip(med, med[1:]))


def test_deterministic_column_has_zero_gap():
    insts = [LotSizingInstance(DemandProcess([Grid.point(float(m)) for m in pattern_means(p, 5)]),
                               a=300, measure="alpha", level=0.9, name=p) for p in ("STA", "SIN2")]
    rows = run_gap_study(insts, W_list=(2, 3), strategies=("uniform",))
    assert all(r["gap"] == pytest.approx(0, abs=1e-12) for r in rows)


def test_workers_do_not_change_rows():
    insts = generate_testbed(small_cfg(patterns=("SIN1", "RAND")))
    a = run_gap_study(insts, W_list=(2, 3), evaluate=False)
    b = run_gap_study(insts, W_list=(2, 3), evaluate=False, workers=3)
    drop = ("build_ms", "solve_ms")
    assert [{k: v for k, v in r.items() if k not in drop} for r in a] == \
           [{k: v for k, v in r.items() if k not in drop} for r in b]


def test_failed_cell_is_recorded():
    inst = LotSizingInstance(heterogeneous_process(3, [50, 60, 70]), a=100, measure="penalty", b=4, name="het")
    rows = run_gap_study([inst], W_list=(2,), strategies=("table", "uniform"))
    status = {r["partition_strategy"]: r["status"] for r in rows}
    assert status == {"table": "error", "uniform": "optimal"}
    with pytest.raises(ConfigurationError):
        run_gap_study([], W_list=(2,))
    with pytest.raises(ConfigurationError):
        run_gap_study([inst, inst], W_list=(2,))


def test_limit_status_recorded():
    insts = generate_testbed(small_cfg(patterns=("SIN1",), N=15, cv_levels=(0.3,)))
    rows = run_gap_study(insts, W_list=(11,), solver=SolverConfig(time_limit=1e-3), evaluate=False)
    assert rows[0]["status"] in ("limit", "optimal")
    if rows[0]["status"] == "limit":
        assert rows[0]["gap"] is None


def test_csv_round_trip(tmp_path):
    rows = run_gap_study(generate_testbed(small_cfg(patterns=("STA",))), W_list=(2,))
    path = tmp_path / "study.csv"
    write_csv(rows, path)
    back = read_csv(path)
    assert list(back[0]) == list(CSV_COLUMNS)
    for r, b in zip(rows, back):
        assert float(b["gap"]) == r["gap"] and float(b["lb_objective"]) == r["lb_objective"]
        assert b["instance_id"] == r["instance_id"]
    write_csv(rows, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()
    assert summarize(back)[0]["n"] == len(rows)
