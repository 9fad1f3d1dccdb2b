"""Piecewise-linear bounds of the complementary first-order loss function.

A partition of probability mass ``p_1..p_W`` splits the support of a law
into ``W`` consecutive regions (their boundaries are the mass quantiles).
Conditioning on the regions gives the Jensen lower bound

    Lhat_lb(x) = sum_i p_i * max(x - E[w | region i], 0)

whose ``W + 1`` linear pieces have slopes ``sum_{k<=i} p_k``.  Shifting it up
by the largest gap ``e_W`` observed at the breakpoints gives the
Edmundson-Madanski upper bound.
"""

from __future__ import annotations

import logging
import math
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .probdist import DemandProcess, Distribution, DomainError, Normal

log = logging.getLogger(__name__)


class Partition(tuple):
    """Probability masses of the regions, ``p_1..p_W``."""

    def __new__(cls, probabilities, *, tol: float = 1e-12):
        probs = tuple(float(p) for p in probabilities)
        if len(probs) < 1:
            raise DomainError("a partition needs at least one region")
        if any(not p > 0 for p in probs):
            raise DomainError(f"partition masses must be positive: {probs}")
        if abs(math.fsum(probs) - 1.0) > tol:
            raise DomainError(f"partition masses sum to {math.fsum(probs)!r}, not 1")
        return super().__new__(cls, probs)

    @property
    def W(self) -> int:
        return len(self)

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(np.asarray(self, dtype=float))
        cum[-1] = 1.0
        return cum

    def __repr__(self):
        return "Partition(" + ", ".join(f"{p:.6g}" for p in self) + ")"


def uniform_partition(W: int) -> Partition:
    if W < 1:
        raise DomainError(f"number of regions must be >= 1, got {W}")
    probs = [1.0 / W] * W
    # put the rounding residue in the last region so the sum is exactly 1
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return Partition(probs)


@dataclass(frozen=True)
class LossLinearization:
    partition: Partition
    conditional_means: np.ndarray = field(repr=False)
    max_error: float
    source_mean: float
    source_stdev: float

    @property
    def W(self) -> int:
        return self.partition.W

    @property
    def slopes(self) -> np.ndarray:
        """Slope of segment i = 1..W, ``sum_{k<=i} p_k``."""
        return self.partition.cumulative()

    @property
    def intercepts(self) -> np.ndarray:
        """``sum_{k<=i} p_k E[w|region k]`` for i = 1..W."""
        return np.cumsum(np.asarray(self.partition) * self.conditional_means)

    def lower(self, x):
        x = np.asarray(x, dtype=float)
        seg = np.multiply.outer(x, self.slopes) - self.intercepts
        value = np.maximum(seg.max(axis=-1), 0.0)
        return float(value) if value.ndim == 0 else value

    def upper(self, x):
        return self.lower(x) + self.max_error

    def scaled(self, mean: float, stdev: float) -> "LossLinearization":
        """Affine image for ``mean + stdev * w`` (exact for location-scale laws)."""
        return LossLinearization(
            self.partition,
            mean + stdev * self.conditional_means,
            stdev * self.max_error,
            mean + stdev * self.source_mean,
            stdev * self.source_stdev,
        )

    def dump(self) -> str:
        lines = [f"{float(p)!r} {float(m)!r}" for p, m in zip(self.partition, self.conditional_means)]
        lines.append(repr(float(self.max_error)))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, *, mean: float | None = None, stdev: float = float("nan")):
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        if len(rows) < 2 or len(rows[-1]) != 1 or any(len(r) != 2 for r in rows[:-1]):
            raise ValueError("partition dump needs 'p E' lines followed by one error line")
        probs = [float(r[0]) for r in rows[:-1]]
        means = np.array([float(r[1]) for r in rows[:-1]])
        part = Partition(probs, tol=1e-9)
        if mean is None:
            mean = float(np.dot(part, means))
        return cls(part, means, float(rows[-1][0]), mean, stdev)


def bound_values(x, lin: LossLinearization):
    """(lower, upper) bounds of ``E[max(x - w, 0)]``."""
    lo = lin.lower(x)
    return lo, lo + lin.max_error


def _breakpoint_analysis(dist: Distribution, cum: np.ndarray):
    """Conditional means and breakpoint errors for mass tuples.

    ``cum`` has shape (..., W) holding cumulative masses with last entry 1.
    Returns ``(means, errors)`` with the same shape.
    """
    cum = np.asarray(cum, dtype=float)
    g = np.asarray(dist.level_expectation(cum), dtype=float)
    lead = np.zeros(cum.shape[:-1] + (1,))
    masses = np.diff(cum, axis=-1, prepend=lead)
    means = np.diff(g, axis=-1, prepend=lead) / masses
    intercepts = np.cumsum(masses * means, axis=-1)
    # Jensen value at breakpoint i: max over segments k of c_k m_i - A_k
    seg = cum[..., None, :] * means[..., :, None] - intercepts[..., None, :]
    jensen = np.maximum(seg.max(axis=-1), 0.0)
    exact = np.asarray(dist.complementary_loss(means), dtype=float)
    return means, exact - jensen


def linearize(dist: Distribution, partition: Partition) -> LossLinearization:
    """Jensen/Edmundson-Madanski data of ``dist`` under ``partition``."""
    partition = partition if isinstance(partition, Partition) else Partition(partition)
    if dist.variance() <= 0.0:
        m = dist.mean()
        return LossLinearization(partition, np.full(partition.W, m), 0.0, m, 0.0)
    means, errors = _breakpoint_analysis(dist, partition.cumulative())
    return LossLinearization(
        partition, means, float(max(errors.max(), 0.0)), dist.mean(), dist.stdev())


# ---------------------------------------------------------------------------
# cached linearisation of every range sum of a demand process

_CACHE_SIZE = 20_000
_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()


def cached_linearize(dist: Distribution, partition: Partition) -> LossLinearization:
    key = (dist.fingerprint, tuple(partition))
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
    lin = linearize(dist, partition)
    with _cache_lock:
        _cache[key] = lin
        while len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)
    return lin


class LinearizationSet(dict):
    """``(j, t) -> LossLinearization`` for every range sum ``d_j + .. + d_t``."""

    def __init__(self, partition: Partition, items=()):
        super().__init__(items)
        self.partition = partition

    @property
    def W(self):
        return self.partition.W


def linearize_process(process: DemandProcess, partition: Partition) -> LinearizationSet:
    """Generic path: linearise each range sum numerically."""
    N = len(process)
    out = LinearizationSet(partition)
    for t in range(1, N + 1):
        for j in range(1, t + 1):
            out[(j, t)] = cached_linearize(process.convolution(j, t).law, partition)
    return out


def normal_process_linearization(process: DemandProcess, table: LossLinearization) -> LinearizationSet:
    """Normal path: scale a standard-normal linearisation to every range sum."""
    if not all(isinstance(d, Normal) for d in process.periods):
        raise DomainError("the standard-normal path needs normally distributed demand")
    means = process.means()
    var = np.square(process.stdevs())
    out = LinearizationSet(table.partition)
    N = len(process)
    for t in range(1, N + 1):
        for j in range(1, t + 1):
            mu = float(means[j - 1:t].sum())
            sd = math.sqrt(float(var[j - 1:t].sum()))
            out[(j, t)] = table.scaled(mu, sd)
    return out


# ---------------------------------------------------------------------------
# partition search


@dataclass(frozen=True)
class SearchConfig:
    population_size: int | None = None  # defaults to 500 * W
    step_size: float = 0.002
    seed: int = 0
    max_sweeps: int = 1000

    def population_for(self, W: int) -> int:
        n = 500 * W if self.population_size is None else self.population_size
        if n < 1:
            raise DomainError("population size must be >= 1")
        return n


def minimax_error(dists, partition) -> float:
    cum = Partition(partition, tol=1e-9).cumulative()
    return float(_score(dists, cum[None, :])[0])


def _score(dists, cum: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Largest breakpoint error over ``dists`` for each row of ``cum``."""
    best = np.zeros(cum.shape[0])
    for start in range(0, cum.shape[0], chunk):
        block = cum[start:start + chunk]
        worst = np.zeros(block.shape[0])
        for d in dists:
            if d.variance() <= 0.0:
                continue
            _, err = _breakpoint_analysis(d, block)
            worst = np.maximum(worst, err.max(axis=-1))
        best[start:start + chunk] = worst
    return best


def _to_cum(probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=-1)
    cum[..., -1] = 1.0
    return cum


def optimize_partition(dists, W: int, cfg: SearchConfig | None = None) -> Partition:
    """Random sampling followed by coordinate descent on the minimax error.

    The uniform partition is part of the sampled population, so the result
    is never worse than uniform.  Moves shift ``step_size`` of mass between
    region ``i`` and the last region, for ``i = 1..W-1``.
    """
    cfg = cfg or SearchConfig()
    dists = list(dists)
    if not dists:
        raise DomainError("need at least one distribution")
    if W < 2:
        raise DomainError("partition search needs W >= 2")
    rng = np.random.default_rng(cfg.seed)
    S = cfg.population_for(W)
    population = np.vstack([np.full((1, W), 1.0 / W), rng.dirichlet(np.ones(W), size=S)])
    population = population[np.all(population > 0, axis=1)]
    scores = _score(dists, _to_cum(population))
    k = int(np.argmin(scores))  # first minimum: uniform wins ties
    best, best_err = population[k].copy(), float(scores[k])
    log.debug("sampling: best minimax error %.6g (uniform %.6g)", best_err, scores[0])

    step = float(cfg.step_size)
    for sweep in range(cfg.max_sweeps):
        improved = False
        for i in range(W - 1):
            eps = step
            room = min(best[i], best[-1])
            if eps >= room:
                eps = 0.5 * room
                warnings.warn(
                    f"step size {step} not below incumbent mass {room:.3g}; clipped to {eps:.3g}",
                    RuntimeWarning, stacklevel=2)
            cands = np.vstack([best, best])
            cands[0, i] -= eps
            cands[0, -1] += eps
            cands[1, i] += eps
            cands[1, -1] -= eps
            ok = np.all(cands > 0, axis=1)
            if not ok.any():
                continue
            cands = cands[ok]
            errs = _score(dists, _to_cum(cands))
            c = int(np.argmin(errs))  # the "-eps" move comes first and wins ties
            if errs[c] < best_err:
                best, best_err = cands[c], float(errs[c])
                improved = True
        if not improved:
            log.debug("coordinate descent converged after %d sweeps: %.6g", sweep + 1, best_err)
            break
    best = best / best.sum()
    best[-1] = 1.0 - math.fsum(best[:-1])
    return Partition(best)


# ---------------------------------------------------------------------------
# standard-normal tables

_STD = Normal(0.0, 1.0)


def _equal_error_residuals(theta, W):
    probs = _softmax(theta, W)
    _, err = _breakpoint_analysis(_STD, _to_cum(probs))
    return np.diff(err)


def _softmax(theta, W):
    z = np.concatenate([theta, [0.0]])
    z = np.exp(z - z.max())
    return z / z.sum()


@lru_cache(maxsize=None)
def standard_normal_table(W: int) -> LossLinearization:
    """Minimax linearisation of the standard normal complementary loss.

    For a single convex function the minimax partition equalises the errors at
    all breakpoints; the equal-error system is solved from a symmetric,
    coordinate-descent starting point.
    """
    if not 1 <= W <= 20:
        raise DomainError("tables are available for 1 <= W <= 20")
    if W == 1:
        return linearize(_STD, uniform_partition(1))
    start = optimize_partition([_STD], W, SearchConfig(population_size=50 * W, step_size=1e-3, seed=W))
    theta0 = np.log(np.asarray(start[:-1]) / start[-1])
    sol = optimize.least_squares(_equal_error_residuals, theta0, args=(W,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    probs = _softmax(sol.x, W)
    # the optimum is symmetric; average with the mirror image to remove drift
    probs = 0.5 * (probs + probs[::-1])
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    candidate = linearize(_STD, Partition(probs))
    fallback = linearize(_STD, start)
    return candidate if candidate.max_error <= fallback.max_error else fallback


def normal_linearization(mean: float, stdev: float, W: int) -> LossLinearization:
    return standard_normal_table(W).scaled(mean, stdev)
