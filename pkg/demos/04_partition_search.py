"""Choosing one partition for a mix of demand distributions.

Run with ``python demos/04_partition_search.py``.
"""
from __future__ import annotations

from stodyn.bench import heterogeneous_process, pattern_means
from stodyn.linloss import SearchConfig, minimax_error, optimize_partition, uniform_partition

# %% Normal, Poisson, exponential and uniform periods in rotation.
process = heterogeneous_process(15, pattern_means("STA"))
print([type(d).__name__ for d in process.periods[:4]], "...")

# Every range sum d_j + ... + d_t enters some model constraint, so the
# partition has to serve all of them at once.
laws = [process.convolution(j, t).law for t in range(1, 16) for j in range(1, t + 1)]
print(len(laws), "range-sum laws")

# %% Search is seeded with the uniform partition, so it can only improve.
for W in (3, 7, 11):
    uni = minimax_error(laws, uniform_partition(W))
    part = optimize_partition(laws, W, SearchConfig(seed=0))
    best = minimax_error(laws, part)
    print(f"W={W:2d}  uniform {uni:8.3f}  search {best:8.3f}  ratio {uni / best:5.2f}")
    print("      ", " ".join(f"{p:.3f}" for p in part))
