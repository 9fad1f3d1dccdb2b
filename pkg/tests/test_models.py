from __future__ import annotations

import pytest
from scipy import optimize

from conftest import quad_complementary_loss, wagner_whitin
from stodyn.evaluate import exact_policy_cost
from stodyn.linloss import linearize_process, normal_process_linearization, standard_normal_table, uniform_partition
from stodyn.models import (
    ConfigurationError, LotSizingInstance, MilpModel, ModelConstructionError, ModelIntegrityError,
    ModelVariant, Policy, PolicyError, SolverConfig, SolverUnavailable, Status, build_alpha_model,
    build_beta_cyc_model, build_lost_sales_model, build_model, enumerate_schedules_oracle,
    extract_policy, solve,
)
from stodyn.probdist import DemandProcess, Grid, Normal, Poisson, Uniform

CELLS = [(m, s) for m in ("alpha", "penalty", "beta_cyc", "beta") for s in ("backorder", "lost_sales")]


def det_process(values):
    return DemandProcess([Grid.point(float(v)) for v in values])


def both(inst, lins):
    out = {}
    for d in ("lb", "ub"):
        sol = solve(build_model(inst, lins, d))
        assert sol.optimal, sol.message
        out[d] = sol
    return out


def normal_lins(proc, W):
    return normal_process_linearization(proc, standard_normal_table(W))


# -- instances and variants ---------------------------------------------------

def test_instance_validation():
    proc = det_process([10])
    with pytest.raises(ConfigurationError):
        LotSizingInstance(proc, a=-1)
    with pytest.raises(ConfigurationError):
        LotSizingInstance(proc, a=1, measure="alpha", level=1.0)
    with pytest.raises(ConfigurationError):
        LotSizingInstance(proc, a=1, measure="alpha", level=0.0)
    with pytest.raises(ConfigurationError):
        LotSizingInstance(proc, a=1, measure="penalty", b=2, shortage="lost_sales", s=1, v=2)
    with pytest.raises(ConfigurationError):
        LotSizingInstance(proc, a=1, measure="alpha", level=0.9, penalty_basis="per_unit_short")
    with pytest.raises(ConfigurationError):
        ModelVariant("beta", "backorder", "lb", "per_unit_short")


def test_variant_directions():
    v = ModelVariant("penalty", "lost_sales", "ub")
    assert v.maximize and v.optimistic
    assert not ModelVariant("penalty", "backorder", "ub").optimistic
    assert v.with_direction("lb").direction.value == "lower_bound"


def test_policy_validation():
    inst = LotSizingInstance(det_process([10, 10]), a=1, measure="penalty", b=1)
    with pytest.raises(PolicyError):
        Policy({3: 5.0}).validate(inst)
    with pytest.raises(PolicyError):
        Policy({1: -5.0}).validate(inst)
    assert str(Policy({2: 10.0, 1: 400.0})) == "{1: 400, 2: 10}"
    assert Policy({2: 1.0}).cycle_starts(3) == [0, 2, 2]


# -- structure ----------------------------------------------------------------

def test_structure_counts():
    proc = DemandProcess([Normal(100, 10)] * 4)
    inst = LotSizingInstance(proc, a=100, measure="penalty", b=5)
    m = build_model(inst, linearize_process(proc, uniform_partition(3)), "lb")
    assert m.count("delta") == 4 and m.count("P") == 10 and m.n_binaries() == 14
    fam = m.families()
    assert fam["hold_piecewise"] == 12 and fam["short_piecewise"] == 12
    assert fam["cycle_sum"] == 4
    assert m.count("Iub") == 0 and m.count("Ilb") == 4
    assert all(not n.startswith("P[") or int(n[2:-1].split(",")[0]) <= int(n[2:-1].split(",")[1])
               for n in m.names)
    ub = build_model(inst, linearize_process(proc, uniform_partition(3)), "ub")
    assert ub.count("Ilb") == 0 and ub.count("Iub") == 4


def test_shortage_rows_are_holding_rows_shifted():
    proc = DemandProcess([Normal(100, 10), Normal(60, 15), Normal(90, 20)])
    inst = LotSizingInstance(proc, a=100, measure="penalty", b=5)
    m = build_model(inst, normal_lins(proc, 4), "ub")
    hold, short = m.rows_of("hold_piecewise"), m.rows_of("short_piecewise")
    assert len(hold) == len(short)
    for h, s in zip(hold, short):
        h_coefs = {m.names[k]: c for k, c in h.coefs.items()}
        s_coefs = {m.names[k]: c for k, c in s.coefs.items()}
        t = next(n for n in h_coefs if n.startswith("Iub["))[4:-1]
        expect = {("Bub[" + n[4:] if n.startswith("Iub[") else n): c for n, c in h_coefs.items()}
        expect[f"I[{t}]"] = expect.get(f"I[{t}]", 0.0) + 1.0
        assert s_coefs.keys() == {k for k, c in expect.items() if c != 0}
        for k, c in s_coefs.items():
            assert c == pytest.approx(expect[k], abs=1e-12)
        assert (s.lo, s.hi) == (h.lo, h.hi)


def test_missing_linearization_rejected():
    proc = DemandProcess([Normal(100, 10)] * 3)
    inst = LotSizingInstance(proc, a=100, measure="penalty", b=5)
    lins = linearize_process(proc, uniform_partition(3))
    del lins[(1, 3)]
    with pytest.raises(ModelConstructionError):
        build_model(inst, lins)


def test_builder_measure_mismatch():
    proc = DemandProcess([Normal(100, 10)])
    inst = LotSizingInstance(proc, a=100, measure="penalty", b=5)
    with pytest.raises(ConfigurationError):
        build_alpha_model(inst, normal_lins(proc, 2))
    with pytest.raises(ConfigurationError):
        build_lost_sales_model(inst, normal_lins(proc, 2))


def test_lp_export():
    proc = DemandProcess([Normal(100, 10)] * 2)
    inst = LotSizingInstance(proc, a=100, measure="alpha", level=0.9)
    m = build_model(inst, normal_lins(proc, 3))
    text = m.to_lp()
    assert text.startswith("\\ ") and "Minimize" in text and "Subject To" in text and text.rstrip().endswith("End")
    assert "delta(1)" in text and "P(1_2)" in text and " I(1) free" in text
    binaries = text.split("Binary\n")[1].split("End")[0].split()
    assert len(binaries) == m.n_binaries()


# -- deterministic and one-period anchors -------------------------------------

# fill-rate targets tolerate a planned shortfall even without randomness:
# one cycle of 400 units may end (1 - level) * 400 short
@pytest.mark.parametrize("measure,kw,cost,level", [
    ("alpha", {"level": 0.95}, 1100, 400), ("penalty", {"b": 10.0}, 1100, 400),
    ("beta_cyc", {"level": 0.95}, 500 + 280 + 180 + 80, 380), ("beta", {"level": 0.9}, 500 + 260 + 160 + 60, 360)])
def test_deterministic_reduction(measure, kw, cost, level):
    proc = det_process([100, 100, 100, 100])
    inst = LotSizingInstance(proc, a=500, h=1, measure=measure, **kw)
    sols = both(inst, linearize_process(proc, uniform_partition(3)))
    assert sols["lb"].objective == pytest.approx(cost, abs=1e-6)
    assert sols["ub"].objective == pytest.approx(cost, abs=1e-6)
    assert wagner_whitin([100] * 4, 500, 1) == 1100
    assert extract_policy(sols["ub"], inst).levels == {1: pytest.approx(level)}


def test_wagner_whitin_random(rng):
    for _ in range(6):
        d = rng.integers(0, 200, 6).astype(float).tolist()
        a = float(rng.choice([50, 300, 1000]))
        inst = LotSizingInstance(det_process(d), a=a, h=1.0, measure="penalty", b=20.0)
        sol = solve(build_model(inst, linearize_process(inst.demand, uniform_partition(2))))
        assert sol.objective == pytest.approx(wagner_whitin(d, a, 1.0), abs=1e-6)


def test_alpha_single_period():
    proc = DemandProcess([Normal(100, 10)])
    inst = LotSizingInstance(proc, a=100, h=1, measure="alpha", level=0.95)
    for W in range(2, 12):
        sols = both(inst, normal_lins(proc, W))
        assert sols["lb"].objective <= 116.6579 <= sols["ub"].objective
        assert extract_policy(sols["lb"], inst).levels[1] == pytest.approx(116.449, abs=5e-4)


def test_penalty_newsvendor():
    law = Normal(100, 10)
    inst = LotSizingInstance(DemandProcess([law]), a=0, v=0, h=1, b=9, measure="penalty")

    def cost(S):
        hat = quad_complementary_loss(S, law)
        return hat + 9 * (hat - (S - 100))
    res = optimize.minimize_scalar(cost, bounds=(90, 140), method="bounded", options={"xatol": 1e-8})
    assert res.x == pytest.approx(112.8155, abs=1e-3)
    sols = both(inst, normal_lins(inst.demand, 11))
    assert sols["lb"].objective - 1e-6 <= res.fun <= sols["ub"].objective + 1e-6
    e = standard_normal_table(11).max_error * 10
    assert sols["ub"].objective - sols["lb"].objective <= 10 * e + 1e-9


def test_lost_sales_newsvendor():
    law = Normal(100, 20)
    inst = LotSizingInstance(DemandProcess([law]), a=0, v=5, s=15, h=1, b=0, measure="penalty",
                             shortage="lost_sales")

    def neg_profit(S):
        return -(10 * S - 16 * quad_complementary_loss(S, law))
    res = optimize.minimize_scalar(neg_profit, bounds=(60, 160), method="bounded", options={"xatol": 1e-8})
    assert law.cdf(res.x) == pytest.approx(10 / 16, abs=1e-5)
    sols = both(inst, normal_lins(inst.demand, 11))
    assert sols["lb"].objective - 1e-6 <= -res.fun <= sols["ub"].objective + 1e-6


def test_lost_sales_deterministic_matches_backorder():
    d = [80, 120, 60, 150]
    back = LotSizingInstance(det_process(d), a=300, v=2, h=1, measure="alpha", level=0.9)
    lost = LotSizingInstance(det_process(d), a=300, v=2, h=1, measure="alpha", level=0.9,
                             shortage="lost_sales", s=12)
    lins = linearize_process(back.demand, uniform_partition(2))
    sb, sl = solve(build_model(back, lins)), solve(build_model(lost, lins))
    assert extract_policy(sb, back).levels == pytest.approx(extract_policy(sl, lost).levels)
    assert sl.objective == pytest.approx(12 * sum(d) - sb.objective, abs=1e-6)


def test_lost_sales_no_orders_no_profit():
    inst = LotSizingInstance(det_process([50, 50]), a=1e6, v=1, s=2, h=1, measure="penalty", b=0,
                             shortage="lost_sales")
    sol = solve(build_model(inst, linearize_process(inst.demand, uniform_partition(2))))
    assert sol.objective == pytest.approx(0, abs=1e-6)
    assert all(sol.value(f"Q[{t}]") == pytest.approx(0, abs=1e-7) for t in (1, 2))
    assert extract_policy(sol, inst).reviews == []


# -- service variants ------------------------------------------------------

def test_beta_cyc_infeasible_at_two_segments():
    proc = DemandProcess([Normal(100, 30)] * 4)
    inst = LotSizingInstance(proc, a=200, measure="beta_cyc", level=0.99)
    assert solve(build_beta_cyc_model(inst, normal_lins(proc, 2), "ub")).status is Status.INFEASIBLE
    assert solve(build_beta_cyc_model(inst, normal_lins(proc, 11), "ub")).optimal


def test_beta_cyc_slack_with_free_holding():
    proc = DemandProcess([Normal(100, 10)] * 3)
    inst = LotSizingInstance(proc, a=250, h=0, measure="beta_cyc", level=0.5)
    sol = solve(build_model(inst, normal_lins(proc, 5), "ub"))
    assert sol.objective == pytest.approx(250, abs=1e-6)


def test_beta_single_cycle_equals_beta_cyc():
    proc = DemandProcess([Normal(100, 20), Normal(100, 20), Normal(100, 20)])
    kw = dict(a=1e5, h=1, level=0.95)
    lins = normal_lins(proc, 7)
    for d in ("lb", "ub"):
        b = solve(build_model(LotSizingInstance(proc, measure="beta", **kw), lins, d))
        c = solve(build_model(LotSizingInstance(proc, measure="beta_cyc", **kw), lins, d))
        assert b.objective == pytest.approx(c.objective, abs=1e-6)


def test_beta_zero_is_penalty_free():
    proc = DemandProcess([Normal(100, 20)] * 3)
    lins = normal_lins(proc, 5)
    # lower direction: the upper one adds the segment error to every shortage,
    # so never ordering would overshoot the (1 - 0) * total demand cap
    b0 = solve(build_model(LotSizingInstance(proc, a=100, v=1, measure="beta", level=0.0), lins, "lb"))
    p0 = solve(build_model(LotSizingInstance(proc, a=100, v=1, measure="penalty", b=0.0), lins, "lb"))
    assert b0.objective == pytest.approx(p0.objective, abs=1e-6)


def test_horizon_fill_rate_rescues_cycle_infeasibility():
    proc = DemandProcess([Normal(100, 100), Normal(100, 1), Normal(100, 1), Normal(100, 1)])
    lins = linearize_process(proc, uniform_partition(2))
    cyc = LotSizingInstance(proc, a=100, measure="beta_cyc", level=0.9)
    hor = LotSizingInstance(proc, a=100, measure="beta", level=0.9)
    assert solve(build_model(cyc, lins, "ub")).status is Status.INFEASIBLE
    assert enumerate_schedules_oracle(cyc, "ub", lins)[1] is None
    sol = solve(build_model(hor, lins, "ub"))
    assert sol.optimal
    assert sol.objective == pytest.approx(enumerate_schedules_oracle(hor, "ub", lins)[0], rel=1e-6)


def test_beta_not_costlier_than_beta_cyc(rng):
    for _ in range(3):
        means = rng.uniform(50, 150, 5)
        proc = DemandProcess([Normal(m, 0.25 * m) for m in means])
        lins = normal_lins(proc, 5)
        for d in ("lb", "ub"):
            b = solve(build_model(LotSizingInstance(proc, a=300, measure="beta", level=0.9), lins, d))
            c = solve(build_model(LotSizingInstance(proc, a=300, measure="beta_cyc", level=0.9), lins, d))
            assert b.objective <= c.objective + 1e-6


# -- bounds, oracle and solver -------------------------------------------

@pytest.mark.parametrize("measure,shortage", CELLS)
def test_oracle_matches_milp(measure, shortage, rng):
    means = rng.uniform(40, 160, 5)
    proc = DemandProcess([Normal(means[0], 20), Poisson(round(means[1])), Uniform(0, 2 * means[2]),
                          Normal(means[3], 30), Poisson(round(means[4]))])
    kw = {"b": 6.0} if measure == "penalty" else {"level": 0.9}
    if shortage == "lost_sales":
        kw.update(s=9.0, v=2.0)
    inst = LotSizingInstance(proc, a=250, h=1, measure=measure, shortage=shortage, I0=15, **kw)
    lins = linearize_process(proc, uniform_partition(3))
    for d in ("lb", "ub"):
        sol = solve(build_model(inst, lins, d))
        oracle, pol = enumerate_schedules_oracle(inst, d, lins)
        assert sol.objective == pytest.approx(oracle, rel=1e-6)
        assert set(extract_policy(sol, inst).reviews) == set(pol.reviews)
        assert build_model(inst, lins, d).max_violation(sol.x) <= 1e-6


def test_per_unit_short_oracle():
    proc = DemandProcess([Normal(80, 20), Normal(120, 30), Normal(60, 15), Normal(100, 25)])
    inst = LotSizingInstance(proc, a=200, v=2, s=10, b=4, h=1, measure="penalty", shortage="lost_sales",
                             penalty_basis="per_unit_short")
    lins = normal_lins(proc, 4)
    for d in ("lb", "ub"):
        sol = solve(build_model(inst, lins, d))
        assert sol.objective == pytest.approx(enumerate_schedules_oracle(inst, d, lins)[0], rel=1e-6)


def test_oracle_refuses_long_horizons():
    proc = DemandProcess([Normal(10, 1)] * 11)
    inst = LotSizingInstance(proc, a=1, measure="penalty", b=1)
    with pytest.raises(ValueError):
        enumerate_schedules_oracle(inst, "lb", {})


def test_bound_ordering_and_exact_sandwich(rng):
    means = rng.uniform(60, 140, 6)
    proc = DemandProcess([Normal(m, 0.3 * m) for m in means])
    for measure, kw in (("alpha", {"level": 0.9}), ("penalty", {"b": 8.0}), ("beta", {"level": 0.95})):
        inst = LotSizingInstance(proc, a=400, v=1, h=1, measure=measure, **kw)
        sols = both(inst, normal_lins(proc, 5))
        lb, ub = sols["lb"].objective, sols["ub"].objective
        assert lb <= ub + 1e-6
        exact_ub = exact_policy_cost(extract_policy(sols["ub"], inst), inst).objective
        exact_lb = exact_policy_cost(extract_policy(sols["lb"], inst), inst).objective
        assert lb - 1e-6 <= exact_ub <= ub + 1e-6
        assert exact_lb >= lb - 1e-6


def test_normal_fast_path_equals_generic():
    proc = DemandProcess([Normal(100, 25), Normal(70, 10), Normal(130, 40), Normal(90, 20)])
    inst = LotSizingInstance(proc, a=300, h=1, measure="penalty", b=7)
    table = standard_normal_table(6)
    fast = solve(build_model(inst, normal_process_linearization(proc, table), "ub"))
    slow = solve(build_model(inst, linearize_process(proc, table.partition), "ub"))
    assert fast.objective == pytest.approx(slow.objective, abs=1e-6)


def test_gap_shrinks_with_segments():
    proc = DemandProcess([Normal(100, 30)] * 5)
    inst = LotSizingInstance(proc, a=300, h=1, measure="penalty", b=10)
    gaps = []
    for W in (2, 3, 4, 7, 11):
        sols = both(inst, normal_lins(proc, W))
        gaps.append(sols["ub"].objective - sols["lb"].objective)
    assert all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.1 * gaps[0]


def test_extract_policy_large_initial_stock():
    inst = LotSizingInstance(det_process([10, 10]), a=100, measure="alpha", level=0.9, I0=50)
    sol = solve(build_model(inst, linearize_process(inst.demand, uniform_partition(2))))
    assert extract_policy(sol, inst).reviews == []
    assert sol.objective == pytest.approx(40 + 30)


def test_extract_policy_detects_inconsistency():
    inst = LotSizingInstance(det_process([10, 10]), a=100, measure="alpha", level=0.9)
    sol = solve(build_model(inst, linearize_process(inst.demand, uniform_partition(2))))
    sol.x = sol.x.copy()
    sol.x[sol._lookup["P[1,2]"]] = 1 - sol.x[sol._lookup["P[1,2]"]]
    with pytest.raises(ModelIntegrityError):
        extract_policy(sol, inst)


def test_solver_contract(monkeypatch):
    m = MilpModel("empty")
    m.constant = 5.0
    sol = solve(m)
    assert sol.optimal and sol.objective == 5.0
    monkeypatch.setenv("STODYN_SOLVER", "nonexistent")
    with pytest.raises(SolverUnavailable):
        solve(m)
    monkeypatch.setenv("STODYN_SOLVER", "highs")
    monkeypatch.setenv("STODYN_TIME_LIMIT", "7")
    assert SolverConfig().resolved().time_limit == 7.0


def test_infeasible_model_status():
    m = MilpModel()
    m.add_var("x", 0, 1)
    m.add_ge({"x": 1.0}, 2.0)
    sol = solve(m)
    assert sol.status is Status.INFEASIBLE
    with pytest.raises(ValueError):
        extract_policy(sol, LotSizingInstance(det_process([1]), a=1, measure="penalty", b=1))
