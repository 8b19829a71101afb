"""Joint pushing and caching under offline, statistical and causal request-delay information."""

from .analysis import ThroughputReport
from .causal import CausalPlanner, run_causal
from .errors import (
    CapacityViolation,
    DomainError,
    DuplicatePush,
    InstanceTooLarge,
    InvalidProfile,
    InvalidRemoval,
    JPCError,
    StateBudgetExceeded,
)
from .model import (
    NEVER,
    RequestProfile,
    RequestRealization,
    SimTrace,
    SystemConfig,
    sample_realization,
    step_buffer,
)
from .offline import run_offline
from .sim import monte_carlo
from .trellis import TrellisProblem, run_statistical, solve, statistical_plan

__version__ = "0.1.0"

__all__ = [
    "NEVER",
    "CapacityViolation",
    "CausalPlanner",
    "DomainError",
    "DuplicatePush",
    "InstanceTooLarge",
    "InvalidProfile",
    "InvalidRemoval",
    "JPCError",
    "RequestProfile",
    "RequestRealization",
    "SimTrace",
    "StateBudgetExceeded",
    "SystemConfig",
    "ThroughputReport",
    "TrellisProblem",
    "monte_carlo",
    "run_causal",
    "run_offline",
    "run_statistical",
    "sample_realization",
    "solve",
    "statistical_plan",
    "step_buffer",
]
