"""Online admission and scheduling of parameter-server training jobs.

The package provides:

- a domain model for jobs, clusters, and per-slot schedules (:mod:`.model`);
- exponential dual resource prices and allocation state (:mod:`.pricing`);
- the payoff-maximizing schedule search (:mod:`.search`);
- the online admission engine built on it (:mod:`.engine`);
- FIFO / DRF / RRH baseline schedulers (:mod:`.baselines`);
- an exact offline oracle for desk-scale instances (:mod:`.oracle`);
- a synthetic trace generator and simulation harness (:mod:`.tracegen`,
  :mod:`.simulate`), plus property suites (:mod:`.verify`) and a CLI
  (:mod:`.cli`).
"""

from .model import (
    ClusterSpec,
    Job,
    ModelError,
    Schedule,
    UtilityFunction,
    validate_job,
    validate_schedule,
    workers_needed,
)
from .pricing import PriceConstants, PricingState, compute_constants
from .search import best_schedule, cost_t, dp_cost
from .engine import Decision, OnlineScheduler
from .oracle import OracleLimits, OracleResult, exhaustive_best_schedule, solve_offline

__all__ = [
    "ClusterSpec",
    "Job",
    "ModelError",
    "Schedule",
    "UtilityFunction",
    "validate_job",
    "validate_schedule",
    "workers_needed",
    "PriceConstants",
    "PricingState",
    "compute_constants",
    "best_schedule",
    "cost_t",
    "dp_cost",
    "Decision",
    "OnlineScheduler",
    "OracleLimits",
    "OracleResult",
    "exhaustive_best_schedule",
    "solve_offline",
]
