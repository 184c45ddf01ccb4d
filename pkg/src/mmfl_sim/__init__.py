"""Trace-driven simulator and scheduling library for multi-model federated learning.

Several models train concurrently over one pool of heterogeneous clients.
Each round the scheduler adapts every client's batch size and iteration
count to the model's gradient noise scale, assigns clients to one or more
models by maximizing utility under a percentile deadline, and tightens or
loosens that deadline from the test-loss trend. Real training is replaced
by a synthetic statistical-progress model so runs are fast and exactly
reproducible.
"""

from .batch_adapt import (BatchPlan, IterationRule, adapted_iterations,
                          optimize_batch, optimize_batch_table,
                          relative_efficiency, relative_progress)
from .config import (ArmConfig, ModelConfig, Selector, SimulationConfig,
                     load_config, validate_config_dict)
from .deadline import DeadlineController, Direction, compute_deadline
from .domain import (SENTINEL_NEVER_SELECTED, AssignmentMatrix,
                     ConfigurationError, DeviceKind, DeviceProfile,
                     DomainError, GNSSchedule, ModelState, RoundRecord,
                     throughput)
from .experiments import compare, lower_median, sweep_alpha
from .selection import (SelectionInstance, build_ilp, select_greedy_per_model,
                        select_random, select_round_robin, solve_brute_force,
                        solve_exact, solve_ilp)
from .simengine import SimulationResult, Simulator, run_simulation
from .utility import (boosted_score, combined_utilities, data_utility,
                      system_utility)

__version__ = "0.1.0"

__all__ = [
    "ArmConfig", "AssignmentMatrix", "BatchPlan", "ConfigurationError",
    "DeadlineController", "DeviceKind", "DeviceProfile", "Direction",
    "DomainError", "GNSSchedule", "IterationRule", "ModelConfig", "ModelState",
    "RoundRecord", "SENTINEL_NEVER_SELECTED", "SelectionInstance", "Selector",
    "SimulationConfig", "SimulationResult", "Simulator", "adapted_iterations",
    "boosted_score", "build_ilp", "combined_utilities", "compare",
    "compute_deadline", "data_utility", "load_config", "lower_median",
    "optimize_batch", "optimize_batch_table", "relative_efficiency",
    "relative_progress", "run_simulation", "select_greedy_per_model",
    "select_random", "select_round_robin", "solve_brute_force", "solve_exact",
    "solve_ilp", "sweep_alpha", "system_utility", "throughput",
    "validate_config_dict",
]
