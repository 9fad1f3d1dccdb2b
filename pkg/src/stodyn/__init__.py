"""Bounds for the stochastic lot-sizing problem under static-dynamic uncertainty.

Piecewise-linear lower (Jensen) and upper (Edmundson-Madanski) bounds of the
first-order loss function turn each variant into a MILP; solving the two
bound models brackets the optimal expected cost or profit.
"""

from .evaluate import EvaluationReport, exact_policy_cost, optimality_gap, simulate_policy
from .linloss import (
    LossLinearization, Partition, SearchConfig, linearize, linearize_process,
    normal_process_linearization, optimize_partition, standard_normal_table, uniform_partition,
)
from .models import (
    Direction, LotSizingInstance, Measure, ModelVariant, PenaltyBasis, Policy, Shortage,
    SolverConfig, build_model, enumerate_schedules_oracle, extract_policy, solve,
)
from .probdist import DemandProcess, Exponential, Grid, Normal, Poisson, Uniform

__version__ = "0.1.0"
