"""How the bound gap closes as segments are added.

Run with ``python demos/03_gap_study.py [out.csv]``.  Takes a few minutes.
"""
from __future__ import annotations

import sys

from stodyn.bench import TestBedConfig, generate_testbed, run_gap_study, summarize, write_csv

# %% Nine instances: three demand shapes by three variabilities.
cfg = TestBedConfig(patterns=("STA", "SIN1", "LCY1"), a_levels=(1000.0,), v_levels=(2.0,),
                    levels=(0.95,), measure="beta_cyc")
instances = generate_testbed(cfg)
print(len(instances), "instances,", cfg.N, "periods each")

# %% One LB and one UB model per (instance, W).
rows = run_gap_study(instances, W_list=(2, 3, 4, 7, 11), workers=4)
if len(sys.argv) > 1:
    write_csv(rows, sys.argv[1])

# %% Median gaps fall by roughly an order of magnitude from W=2 to W=11.
print(f"{'W':>3} {'median':>10} {'q1':>10} {'q3':>10} {'solve ms':>9}")
for s in summarize(rows):
    print(f"{s['W']:3d} {s['median_gap']:10.2e} {s['q1_gap']:10.2e} {s['q3_gap']:10.2e} "
          f"{s['median_solve_ms']:9.0f}")
