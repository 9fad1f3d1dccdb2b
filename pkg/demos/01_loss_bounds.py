"""Piecewise bounds on the complementary loss of a standard normal.

Run with ``python demos/01_loss_bounds.py``.
"""
from __future__ import annotations

import numpy as np

from stodyn.linloss import linearize, standard_normal_table, uniform_partition
from stodyn.probdist import Normal

# %% Two regions split at the median.
# The lower envelope touches the loss at the region boundary; the upper
# envelope is the lower one shifted up by the largest breakpoint error.
law = Normal(0, 1)
lin = linearize(law, uniform_partition(2))
print("conditional means", np.round(lin.conditional_means, 5))
print("max error e_2    ", round(lin.max_error, 5))

xs = np.linspace(-3, 3, 7)
print(f"{'x':>6} {'lower':>9} {'exact':>9} {'upper':>9}")
for x, lo, ex, hi in zip(xs, lin.lower(xs), law.complementary_loss(xs), lin.upper(xs)):
    print(f"{x:6.2f} {lo:9.5f} {ex:9.5f} {hi:9.5f}")

# %% Equal-error tables against uniform splits.
# The tabulated partitions equalise the error at every breakpoint, which
# is what makes them minimax for a single convex loss.
print(f"\n{'W':>3} {'uniform':>10} {'table':>10}")
for W in range(2, 12):
    uni = linearize(law, uniform_partition(W)).max_error
    tab = standard_normal_table(W).max_error
    print(f"{W:3d} {uni:10.6f} {tab:10.6f}")

# %% Any normal law reuses the table by scaling: error grows with sigma.
scaled = standard_normal_table(5).scaled(100, 30)
print("\nnormal(100, 30), W=5: error", round(scaled.max_error, 4), "= 30 x", round(scaled.max_error / 30, 6))
