"""Safe model-free Q-learning with reciprocal control barrier functions."""

from .barrier import BarrierSpec
from .config import parse_config
from .estimator import KKTSafeController, SafeQLearningController
from .exceptions import SafeQError
from .harness import (
    ExperimentConfig,
    NoiseSpec,
    RunMetrics,
    TrajectoryLog,
    compare_baseline,
    run_episode,
    run_oracle_episode,
    sweep_ksb,
)
from .plant import IntegratorConfig
from .qlearn import LearnGains
from .reporting import emit_csv, emit_summary
from .riccati import SystemModel, benchmark_system, solve_care

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "ExperimentConfig",
    "IntegratorConfig",
    "KKTSafeController",
    "LearnGains",
    "NoiseSpec",
    "RunMetrics",
    "SafeQError",
    "SafeQLearningController",
    "SystemModel",
    "TrajectoryLog",
    "compare_baseline",
    "emit_csv",
    "emit_summary",
    "benchmark_system",
    "parse_config",
    "run_episode",
    "run_oracle_episode",
    "solve_care",
    "sweep_ksb",
]
