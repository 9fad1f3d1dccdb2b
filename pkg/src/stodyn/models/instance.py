from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..probdist import DemandProcess


class Measure(str, Enum):
    ALPHA = "alpha"
    PENALTY = "penalty"
    BETA_CYC = "beta_cyc"
    BETA = "beta"


class Shortage(str, Enum):
    BACKORDER = "backorder"
    LOST_SALES = "lost_sales"


class Direction(str, Enum):
    LOWER = "lower_bound"
    UPPER = "upper_bound"

    @classmethod
    def parse(cls, value) -> "Direction":
        aliases = {"lb": cls.LOWER, "lower": cls.LOWER, "ub": cls.UPPER, "upper": cls.UPPER}
        if isinstance(value, cls):
            return value
        return aliases.get(str(value).lower()) or cls(value)


class PenaltyBasis(str, Enum):
    PER_PERIOD = "per_period"
    PER_UNIT_SHORT = "per_unit_short"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ModelVariant:
    measure: Measure
    shortage: Shortage = Shortage.BACKORDER
    direction: Direction = Direction.LOWER
    penalty_basis: PenaltyBasis = PenaltyBasis.PER_PERIOD

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "shortage", Shortage(self.shortage))
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        object.__setattr__(self, "penalty_basis", PenaltyBasis(self.penalty_basis))
        if self.penalty_basis is PenaltyBasis.PER_UNIT_SHORT and not (
                self.shortage is Shortage.LOST_SALES and self.measure is Measure.PENALTY):
            raise ConfigurationError("per-unit-short penalties apply to lost-sales penalty models only")

    @property
    def maximize(self) -> bool:
        return self.shortage is Shortage.LOST_SALES

    @property
    def optimistic(self) -> bool:
        """True when the model uses the Jensen (lower) loss bounds.

        That is the cost lower bound, or the profit upper bound.
        """
        return (self.direction is Direction.LOWER) != self.maximize

    def with_direction(self, direction) -> "ModelVariant":
        return replace(self, direction=Direction.parse(direction))

    @property
    def cell(self) -> str:
        return f"{self.shortage.value}/{self.measure.value}"


@dataclass(frozen=True)
class LotSizingInstance:
    """Costs, service requirement and demand of one lot-sizing problem.

    ``level`` is the alpha, beta or cycle beta target for service measures;
    ``b`` is the shortage penalty for the penalty measure.
    """

    demand: DemandProcess
    a: float
    v: float = 0.0
    h: float = 1.0
    measure: Measure = Measure.PENALTY
    level: float | None = None
    b: float = 0.0
    s: float | None = None
    I0: float = 0.0
    shortage: Shortage = Shortage.BACKORDER
    penalty_basis: PenaltyBasis = PenaltyBasis.PER_PERIOD
    name: str = ""
    tags: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "shortage", Shortage(self.shortage))
        object.__setattr__(self, "penalty_basis", PenaltyBasis(self.penalty_basis))
        for name in ("a", "v", "h"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.measure is Measure.PENALTY:
            if not self.b >= 0:
                raise ConfigurationError("penalty cost b must be nonnegative")
        elif self.level is None or not 0.0 <= self.level < 1.0:
            raise ConfigurationError(f"{self.measure.value} needs a service level in [0, 1)")
        if self.measure is Measure.ALPHA and not self.level > 0.0:
            raise ConfigurationError("alpha service level must lie in (0, 1)")
        if self.shortage is Shortage.LOST_SALES:
            if self.s is None or self.s < self.v:
                raise ConfigurationError("lost-sales models need a selling price s >= v")
        if not math.isfinite(self.I0):
            raise ConfigurationError("initial inventory must be finite")
        ModelVariant(self.measure, self.shortage, Direction.LOWER, self.penalty_basis)

    @property
    def N(self) -> int:
        return len(self.demand)

    @property
    def margin(self) -> float:
        return float((self.s or 0.0) - self.v)

    def variant(self, direction=Direction.LOWER) -> ModelVariant:
        return ModelVariant(self.measure, self.shortage, Direction.parse(direction), self.penalty_basis)

    def with_demand(self, demand: DemandProcess) -> "LotSizingInstance":
        return replace(self, demand=demand)

    def expected_demand(self) -> np.ndarray:
        return self.demand.means()


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    """Review periods (1-based) mapped to their order-up-to levels."""

    levels: dict

    def __post_init__(self):
        clean = {int(t): float(S) for t, S in dict(self.levels).items()}
        object.__setattr__(self, "levels", dict(sorted(clean.items())))

    @property
    def reviews(self) -> list[int]:
        return list(self.levels)

    def cycle_starts(self, N: int) -> list[int]:
        """For each period 1..N the latest review <= t, or 0 before the first review."""
        out, current = [], 0
        for t in range(1, N + 1):
            if t in self.levels:
                current = t
            out.append(current)
        return out

    def validate(self, inst: LotSizingInstance, tol: float = 1e-6) -> None:
        for t, S in self.levels.items():
            if not 1 <= t <= inst.N:
                raise PolicyError(f"review period {t} outside 1..{inst.N}")
            if inst.I0 >= 0 and S < -tol:
                raise PolicyError(f"negative order-up-to level S_{t} = {S}")

    def __str__(self):
        return "{" + ", ".join(f"{t}: {S:.6g}" for t, S in self.levels.items()) + "}"
