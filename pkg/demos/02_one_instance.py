"""Bounds, exact cost and simulation for one fifteen-period instance.

Run with ``python demos/02_one_instance.py``.
"""
from __future__ import annotations

from stodyn.bench import pattern_means
from stodyn.evaluate import exact_policy_cost, optimality_gap, simulate_policy
from stodyn.linloss import normal_process_linearization, standard_normal_table
from stodyn.models import LotSizingInstance, build_model, extract_policy, solve
from stodyn.probdist import DemandProcess, Normal

# %% A life-cycle demand shape with 20% coefficient of variation.
means = pattern_means("LCY1", 15)
demand = DemandProcess([Normal(m, 0.2 * m) for m in means])
inst = LotSizingInstance(demand, a=500, v=2, h=1, measure="alpha", level=0.95, name="lcy1-alpha")
print("expected demand", [round(m) for m in means])

# %% Lower and upper bound models share the review structure and differ
# only in which envelope of the loss function they use.
lins = normal_process_linearization(demand, standard_normal_table(7))
lb = solve(build_model(inst, lins, "lb"))
ub = solve(build_model(inst, lins, "ub"))
policy = extract_policy(ub, inst)
print(f"LB {lb.objective:.2f}  UB {ub.objective:.2f}  gap {optimality_gap(lb.objective, ub.objective):.4%}")
print("UB policy", policy)

# %% The exact cost of the UB policy must land between the two bounds.
exact = exact_policy_cost(policy, inst)
print(f"exact cost {exact.expected_cost:.2f}, lowest period alpha {exact.min_alpha:.4f}")

# %% Simulation is an independent check of the loss integrals.
sim = simulate_policy(policy, inst, reps=100_000, seed=1, workers=4)
print(f"simulated  {sim.objective:.2f} +/- {1.96 * sim.std_error:.2f} (95%)")
