"""MILP models for the stochastic lot-sizing variants, plus solver plumbing."""

from .builders import (
    ModelConstructionError, build_alpha_model, build_beta_cyc_model, build_beta_model,
    build_lost_sales_model, build_model, build_penalty_model, cycle_big_m, lost_sales_big_m,
    order_big_m,
)
from .extract import ModelIntegrityError, extract_policy
from .instance import (
    ConfigurationError, Direction, LotSizingInstance, Measure, ModelVariant, PenaltyBasis,
    Policy, PolicyError, Shortage,
)
from .milp import MilpModel, SolverConfig, SolverSolution, SolverUnavailable, Status, solve
from .oracle import enumerate_schedules_oracle

__all__ = [
    "ConfigurationError", "Direction", "LotSizingInstance", "Measure", "MilpModel",
    "ModelConstructionError", "ModelIntegrityError", "ModelVariant", "PenaltyBasis", "Policy",
    "PolicyError", "Shortage", "SolverConfig", "SolverSolution", "SolverUnavailable", "Status",
    "build_alpha_model", "build_beta_cyc_model", "build_beta_model", "build_lost_sales_model",
    "build_model", "build_penalty_model", "cycle_big_m", "enumerate_schedules_oracle",
    "extract_policy", "lost_sales_big_m", "order_big_m", "solve",
]
