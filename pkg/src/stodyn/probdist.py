"""Single-period demand laws and their sums over period ranges.

Every law exposes the same small set of exact queries: moments, CDF,
quantile, partial expectations and the (complementary) first-order loss
function.  These values are the ground truth that the piecewise bounds and
the policy evaluator are checked against.

Conventions
-----------
* CDFs are right-continuous, ``cdf(x) = P(X <= x)``.
* ``partial_expectation(x) = E[X; X <= x]``.
* ``level_expectation(c) = integral_0^c F^{-1}(u) du``, the expectation of
  ``X`` restricted to the lowest probability mass ``c``.  For discrete laws
  an atom straddling ``c`` is split, which is what lets arbitrary mass
  partitions be applied to Poisson and grid laws.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats


class DomainError(ValueError):
    """A parameter lies outside the domain of the requested operation."""


class DegenerateRegionError(ValueError):
    """A conditioning region carries no probability mass."""


_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _std_pdf(z):
    return _INV_SQRT2PI * np.exp(-0.5 * np.square(z))


def _std_cdf(z):
    return special.ndtr(z)


def _check_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0)) or np.any(~(p < 1.0)):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return p


def _out(value, like):
    """Return a python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(value)
    return value


class Distribution:
    """Base class of all demand laws.

    Subclasses implement ``cdf``, ``_ppf``, ``partial_expectation`` and the
    moments; the loss functions and conditional means follow from those.
    """

    kind = "abstract"
    discrete = False

    # -- moments -----------------------------------------------------------
    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def stdev(self) -> float:
        return math.sqrt(self.variance())

    # -- distribution queries ---------------------------------------------
    def cdf(self, x):
        raise NotImplementedError

    def cdf_left(self, x):
        """``P(X < x)``; equal to ``cdf`` for continuous laws."""
        return self.cdf(x)

    def partial_expectation(self, x):
        raise NotImplementedError

    def partial_expectation_left(self, x):
        """``E[X; X < x]``."""
        return self.partial_expectation(x)

    def _ppf(self, p):
        raise NotImplementedError

    def quantile(self, p):
        """Smallest ``x`` with ``cdf(x) >= p`` for ``p`` in (0, 1)."""
        p = _check_probability(p)
        return _out(self._ppf(p), p)

    def sample(self, u):
        """Inverse-CDF transform of uniform variates ``u``."""
        u = np.clip(np.asarray(u, dtype=float), 1e-300, 1.0 - 1e-16)
        return self._ppf(u)

    def level_expectation(self, c):
        """``integral_0^c F^{-1}(u) du`` for masses ``c`` in [0, 1]."""
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        inner = np.clip(c, 1e-300, 1.0 - 1e-16)
        q = self._ppf(inner)
        g = self.partial_expectation(q) - q * (self.cdf(q) - inner)
        g = np.where(c <= 0.0, 0.0, g)
        g = np.where(c >= 1.0, self.mean(), g)
        return _out(g, c)

    # -- loss functions ----------------------------------------------------
    def complementary_loss(self, x):
        """``E[max(x - X, 0)]``."""
        x = np.asarray(x, dtype=float)
        value = x * self.cdf(x) - self.partial_expectation(x)
        return _out(np.maximum(value, 0.0), x)

    def loss(self, x):
        """``E[max(X - x, 0)]`` via the complementary loss identity."""
        x = np.asarray(x, dtype=float)
        value = self.complementary_loss(x) - (x - self.mean())
        return _out(np.maximum(value, 0.0), x)

    def conditional_mean(self, lower: float, upper: float) -> float:
        """``E[X | lower <= X < upper]``.

        The left endpoint is included for discrete mass; for continuous laws
        open and closed intervals coincide.
        """
        if not lower < upper:
            raise DegenerateRegionError(f"empty region [{lower}, {upper})")
        mass = float(self.cdf_left(upper) - self.cdf_left(lower))
        if not mass > 0.0:
            raise DegenerateRegionError(
                f"region [{lower}, {upper}) has zero probability mass")
        first = float(self.partial_expectation_left(upper)
                      - self.partial_expectation_left(lower))
        return first / mass

    # -- identity ------------------------------------------------------------
    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}

    @property
    def fingerprint(self) -> str:
        items = ",".join(f"{k}={v!r}" for k, v in sorted(self.params().items()))
        return f"{self.kind}({items})"

    def support(self) -> tuple[float, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class Normal(Distribution):
    mu: float
    sigma: float

    kind = "normal"

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"normal stdev must be positive, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DomainError("normal mean must be finite")

    def mean(self):
        return float(self.mu)

    def variance(self):
        return float(self.sigma) ** 2

    def stdev(self):
        return float(self.sigma)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(_std_cdf((x - self.mu) / self.sigma), x)

    def partial_expectation(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        value = self.mu * _std_cdf(z) - self.sigma * _std_pdf(z)
        value = np.where(np.isposinf(x), self.mu, np.where(np.isneginf(x), 0.0, value))
        return _out(value, x)

    def complementary_loss(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        value = self.sigma * (z * _std_cdf(z) + _std_pdf(z))
        return _out(np.maximum(value, 0.0), x)

    def _ppf(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def level_expectation(self, c):
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        with np.errstate(invalid="ignore"):
            z = special.ndtri(c)
        value = self.mu * c - self.sigma * np.where(np.isfinite(z), _std_pdf(z), 0.0)
        return _out(value, c)

    def params(self):
        return {"mean": float(self.mu), "stdev": float(self.sigma)}

    def support(self):
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class Poisson(Distribution):
    mu: float

    kind = "poisson"
    discrete = True

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise DomainError(f"poisson mean must be positive, got {self.mu}")

    def mean(self):
        return float(self.mu)

    def variance(self):
        return float(self.mu)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        value = np.where(k < 0, 0.0, special.pdtr(np.maximum(k, 0.0), self.mu))
        return _out(value, x)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        return self.cdf(np.ceil(x) - 1.0)

    def partial_expectation(self, x):
        # E[X; X <= k] = mu * P(X <= k - 1)
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        value = self.mu * np.where(k < 1, 0.0, special.pdtr(np.maximum(k - 1.0, 0.0), self.mu))
        return _out(value, x)

    def partial_expectation_left(self, x):
        x = np.asarray(x, dtype=float)
        return self.partial_expectation(np.ceil(x) - 1.0)

    def _ppf(self, p):
        p = np.asarray(p, dtype=float)
        k = np.asarray(stats.poisson.ppf(p, self.mu), dtype=float)
        k = np.where(np.isfinite(k), k, 0.0)
        # scipy's ppf is accurate to float rounding; settle the boundary exactly
        for _ in range(3):
            down = (k > 0) & (self.cdf(k - 1.0) >= p)
            k = np.where(down, k - 1.0, k)
            up = self.cdf(k) < p
            k = np.where(up, k + 1.0, k)
        return k

    def params(self):
        return {"mean": float(self.mu)}

    def support(self):
        return (0.0, math.inf)


@dataclass(frozen=True)
class Exponential(Distribution):
    theta: float

    kind = "exponential"

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise DomainError(f"exponential mean must be positive, got {self.theta}")

    def mean(self):
        return float(self.theta)

    def variance(self):
        return float(self.theta) ** 2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        value = np.where(x <= 0, 0.0, -np.expm1(-np.maximum(x, 0.0) / self.theta))
        return _out(value, x)

    def partial_expectation(self, x):
        x = np.asarray(x, dtype=float)
        y = np.maximum(x, 0.0)
        with np.errstate(invalid="ignore"):
            value = self.theta * (-np.expm1(-y / self.theta)) - y * np.exp(-y / self.theta)
        value = np.where(np.isposinf(x), self.theta, value)
        return _out(value, x)

    def complementary_loss(self, x):
        x = np.asarray(x, dtype=float)
        y = np.maximum(x, 0.0)
        value = y - self.theta * (-np.expm1(-y / self.theta))
        return _out(np.maximum(value, 0.0), x)

    def _ppf(self, p):
        return -self.theta * np.log1p(-np.asarray(p, dtype=float))

    def level_expectation(self, c):
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        rest = 1.0 - c
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(rest > 0, rest * np.log(np.where(rest > 0, rest, 1.0)), 0.0)
        return _out(self.theta * (c + tail), c)

    def params(self):
        return {"mean": float(self.theta)}

    def support(self):
        return (0.0, math.inf)


@dataclass(frozen=True)
class Uniform(Distribution):
    lower: float
    upper: float

    kind = "uniform"

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise DomainError(f"uniform needs lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def width(self):
        return float(self.upper - self.lower)

    def mean(self):
        return 0.5 * (self.lower + self.upper)

    def variance(self):
        return self.width ** 2 / 12.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.clip((x - self.lower) / self.width, 0.0, 1.0), x)

    def partial_expectation(self, x):
        x = np.asarray(x, dtype=float)
        y = np.clip(x, self.lower, self.upper)
        return _out((y * y - self.lower ** 2) / (2.0 * self.width), x)

    def complementary_loss(self, x):
        x = np.asarray(x, dtype=float)
        inside = (np.clip(x, self.lower, self.upper) - self.lower) ** 2 / (2.0 * self.width)
        value = np.where(x > self.upper, x - self.mean(), inside)
        return _out(value, x)

    def _ppf(self, p):
        return self.lower + self.width * np.asarray(p, dtype=float)

    def level_expectation(self, c):
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        return _out(self.lower * c + 0.5 * self.width * c * c, c)

    def params(self):
        return {"lower": float(self.lower), "upper": float(self.upper)}

    def support(self):
        return (float(self.lower), float(self.upper))


class Grid(Distribution):
    """Finite discrete law on sorted support points.

    Used for deterministic (point-mass) demand, empirical laws, and as the
    numeric representation of sums without a closed form.
    """

    kind = "grid"
    discrete = True

    def __init__(self, points, probs, *, tol: float = 1e-12):
        points = np.asarray(points, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        if points.size == 0 or points.shape != probs.shape:
            raise DomainError("grid needs matching, nonempty points and probabilities")
        if np.any(probs < 0) or not np.all(np.isfinite(points)):
            raise DomainError("grid probabilities must be nonnegative and points finite")
        if abs(probs.sum() - 1.0) > tol:
            raise DomainError(f"grid probabilities sum to {probs.sum()!r}, not 1")
        order = np.argsort(points, kind="stable")
        points, probs = points[order], probs[order]
        # merge duplicate support points
        uniq, inverse = np.unique(points, return_inverse=True)
        if uniq.size != points.size:
            probs = np.bincount(inverse, weights=probs, minlength=uniq.size)
            points = uniq
        keep = probs > 0
        self.points = points[keep]
        self.probs = probs[keep]
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        self._pe = np.cumsum(self.points * self.probs)
        self._mean = float(self._pe[-1])
        self._var = float(np.dot(self.probs, np.square(self.points - self._mean)))
        self._fp = None

    @classmethod
    def point(cls, value: float) -> "Grid":
        """Deterministic demand."""
        return cls([value], [1.0])

    def mean(self):
        return self._mean

    def variance(self):
        return self._var

    def _cum_at(self, idx):
        return np.where(idx >= 0, self._cum[np.maximum(idx, 0)], 0.0)

    def _pe_at(self, idx):
        return np.where(idx >= 0, self._pe[np.maximum(idx, 0)], 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="right") - 1
        return _out(self._cum_at(idx), x)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="left") - 1
        return _out(self._cum_at(idx), x)

    def partial_expectation(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="right") - 1
        return _out(self._pe_at(idx), x)

    def partial_expectation_left(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="left") - 1
        return _out(self._pe_at(idx), x)

    def _ppf(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self._cum, p, side="left")
        return self.points[np.minimum(idx, self.points.size - 1)]

    def level_expectation(self, c):
        c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
        idx = np.minimum(np.searchsorted(self._cum, c, side="left"), self.points.size - 1)
        below = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        pe_below = np.where(idx > 0, self._pe[np.maximum(idx - 1, 0)], 0.0)
        value = pe_below + self.points[idx] * (c - below)
        value = np.where(c >= 1.0, self._mean, value)
        return _out(value, c)

    def params(self):
        return {"points": self.points.tolist(), "probs": self.probs.tolist()}

    @property
    def fingerprint(self):
        if self._fp is None:
            digest = hashlib.sha1(self.points.tobytes() + self.probs.tobytes()).hexdigest()
            self._fp = f"grid({self.points.size}:{digest})"
        return self._fp

    def __eq__(self, other):
        return isinstance(other, Grid) and self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        if self.points.size <= 4:
            return f"Grid(points={self.points.tolist()}, probs={self.probs.tolist()})"
        return f"Grid(<{self.points.size} points>, mean={self._mean:.6g})"

    def support(self):
        return (float(self.points[0]), float(self.points[-1]))

    @property
    def is_point_mass(self) -> bool:
        return self.points.size == 1


def from_dict(spec: dict) -> Distribution:
    """Build a law from its literal form, e.g. ``{"kind": "normal", "mean": 100, "stdev": 30}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    expected = {
        "normal": {"mean", "stdev"},
        "poisson": {"mean"},
        "exponential": {"mean"},
        "uniform": {"lower", "upper"},
        "grid": {"points", "probs"},
        "deterministic": {"value"},
    }
    if kind not in expected:
        raise ValueError(f"unknown distribution kind {kind!r}")
    keys = set(spec)
    if keys != expected[kind]:
        extra = sorted(keys - expected[kind])
        missing = sorted(expected[kind] - keys)
        raise ValueError(f"{kind} literal: unexpected keys {extra}, missing keys {missing}")
    if kind == "normal":
        return Normal(float(spec["mean"]), float(spec["stdev"]))
    if kind == "poisson":
        return Poisson(float(spec["mean"]))
    if kind == "exponential":
        return Exponential(float(spec["mean"]))
    if kind == "uniform":
        return Uniform(float(spec["lower"]), float(spec["upper"]))
    if kind == "deterministic":
        return Grid.point(float(spec["value"]))
    return Grid(spec["points"], spec["probs"])


# ---------------------------------------------------------------------------
# module-level operations


def quantile(dist: Distribution, p: float) -> float:
    return dist.quantile(p)


def conditional_mean(dist: Distribution, region) -> float:
    lower, upper = region
    return dist.conditional_mean(float(lower), float(upper))


def complementary_loss_exact(x, dist: Distribution):
    return dist.complementary_loss(x)


def loss_exact(x, dist: Distribution):
    return dist.loss(x)


# ---------------------------------------------------------------------------
# sums over period ranges

GRID_POINTS = 2 ** 12
_TAIL = 1e-6
_COMPONENT_TAIL = 1e-12
_MAX_EXACT_ATOMS = 200_000


@dataclass(frozen=True)
class Convolution:
    """Law of ``d_j + ... + d_t`` (1-based, inclusive)."""

    source: "DemandProcess" = field(repr=False, compare=False)
    j: int
    t: int
    law: Distribution

    def mean(self):
        return self.law.mean()

    def variance(self):
        return self.law.variance()

    def stdev(self):
        return self.law.stdev()


class DemandProcess:
    """Independent per-period demand laws ``d_1 .. d_N``."""

    def __init__(self, periods, *, grid_points: int = GRID_POINTS):
        periods = tuple(periods)
        if not periods:
            raise DomainError("a demand process needs at least one period")
        for d in periods:
            if not isinstance(d, Distribution):
                raise TypeError(f"not a distribution: {d!r}")
        self.periods = periods
        self.grid_points = int(grid_points)
        self._cache: dict[tuple[int, int], Convolution] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.periods)

    def __getitem__(self, t):
        """1-based period access."""
        if not 1 <= t <= len(self.periods):
            raise IndexError(f"period {t} outside 1..{len(self.periods)}")
        return self.periods[t - 1]

    def __eq__(self, other):
        return isinstance(other, DemandProcess) and self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        return f"DemandProcess(N={len(self)})"

    @property
    def N(self):
        return len(self.periods)

    @property
    def fingerprint(self):
        return "|".join(d.fingerprint for d in self.periods)

    def means(self) -> np.ndarray:
        return np.array([d.mean() for d in self.periods])

    def stdevs(self) -> np.ndarray:
        return np.array([d.stdev() for d in self.periods])

    def mean_range(self, j, t) -> float:
        """Sum of expected demand over periods j..t (0 for an empty range)."""
        if t < j:
            return 0.0
        return float(sum(d.mean() for d in self.periods[j - 1:t]))

    def convolution(self, j: int, t: int) -> Convolution:
        if not (1 <= j <= t <= len(self.periods)):
            raise IndexError(f"invalid period range ({j}, {t}) for N={len(self.periods)}")
        key = (j, t)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        law = sum_laws(self.periods[j - 1:t], grid_points=self.grid_points)
        conv = Convolution(self, j, t, law)
        with self._lock:
            self._cache.setdefault(key, conv)
        return conv

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.periods]


def convolve(process: DemandProcess, j: int, t: int) -> Convolution:
    return process.convolution(j, t)


def sum_laws(laws, *, grid_points: int = GRID_POINTS) -> Distribution:
    """Law of a sum of independent laws: closed form when available."""
    laws = list(laws)
    if len(laws) == 1:
        return laws[0]
    shift = 0.0
    rest = []
    for d in laws:
        if isinstance(d, Grid) and d.is_point_mass:
            shift += float(d.points[0])
        else:
            rest.append(d)
    if not rest:
        return Grid.point(shift)
    if all(isinstance(d, Normal) for d in rest):
        return Normal(sum(d.mu for d in rest) + shift, math.sqrt(sum(d.sigma ** 2 for d in rest)))
    if shift == 0.0 and all(isinstance(d, Poisson) for d in rest):
        return Poisson(sum(d.mu for d in rest))
    if len(rest) == 1 and not isinstance(rest[0], Poisson):
        return _shifted(rest[0], shift)
    if all(isinstance(d, Grid) for d in rest):
        size = 1
        for d in rest:
            size *= d.points.size
        if size <= _MAX_EXACT_ATOMS:
            pts, prs = np.array([shift]), np.array([1.0])
            for d in rest:
                pts = np.add.outer(pts, d.points).ravel()
                prs = np.multiply.outer(prs, d.probs).ravel()
                merged = Grid(pts, prs / prs.sum(), tol=1e-9)
                pts, prs = merged.points, merged.probs
            return Grid(pts, prs, tol=1e-9)
    law = _lattice_sum(rest, grid_points)
    if shift:
        law = Grid(law.points + shift, law.probs, tol=1e-9)
    return law


def _shifted(d: Distribution, shift: float) -> Distribution:
    if shift == 0.0:
        return d
    if isinstance(d, Normal):
        return Normal(d.mu + shift, d.sigma)
    if isinstance(d, Uniform):
        return Uniform(d.lower + shift, d.upper + shift)
    if isinstance(d, Grid):
        return Grid(d.points + shift, d.probs)
    # no closed shift for the remaining kinds; discretise
    return _lattice_sum([d, Grid.point(shift)], GRID_POINTS)


def _discretise(d: Distribution, step: float) -> tuple[int, np.ndarray]:
    """Mean-preserving lattice law of ``d`` on multiples of ``step``.

    Node ``k`` receives ``E[max(0, 1 - |X - k*step| / step)]``, the second
    difference of the complementary loss.  Returns (first node index, masses).
    """
    lo = float(d.quantile(_COMPONENT_TAIL))
    hi = float(d.quantile(1.0 - _COMPONENT_TAIL))
    if isinstance(d, Grid):
        lo, hi = d.support()
    k0 = int(math.floor(lo / step)) - 1
    k1 = int(math.ceil(hi / step)) + 1
    nodes = np.arange(k0 - 1, k1 + 2) * step
    closs = np.asarray(d.complementary_loss(nodes), dtype=float)
    masses = (closs[2:] - 2.0 * closs[1:-1] + closs[:-2]) / step
    masses = np.maximum(masses, 0.0)
    return k0, masses / masses.sum()


def _lattice_sum(laws, grid_points: int) -> Grid:
    def span(tail):
        lo = sum(float(d.quantile(tail)) if not isinstance(d, Grid) else d.support()[0] for d in laws)
        hi = sum(float(d.quantile(1 - tail)) if not isinstance(d, Grid) else d.support()[1] for d in laws)
        return lo, hi

    def build(step):
        start, masses = 0, np.array([1.0])
        for d in laws:
            k0, m = _discretise(d, step)
            masses = np.convolve(masses, m) if min(m.size, masses.size) < 64 else _fftconv(masses, m)
            start += k0
        masses = np.maximum(masses, 0.0)
        masses /= masses.sum()
        cum = np.cumsum(masses)
        first = int(np.searchsorted(cum, 1e-16))
        last = int(np.searchsorted(cum, 1.0 - 1e-16))
        masses = masses[first:last + 1]
        points = (start + first + np.arange(masses.size)) * step
        return Grid(points, masses / masses.sum(), tol=1e-9)

    lo, hi = span(_TAIL)
    coarse = build(max(hi - lo, 1e-12) / grid_points)
    lo = float(coarse.quantile(_TAIL))
    hi = float(coarse.quantile(1.0 - _TAIL))
    return build(max(hi - lo, 1e-12) / grid_points)


def _fftconv(a, b):
    from scipy.signal import fftconvolve
    return fftconvolve(a, b)
