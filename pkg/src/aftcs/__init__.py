"""Adaptive fault-tolerant communication for body sensor networks."""

from .config import ConfigError, ScenarioConfig, load_bundled, load_config
from .metrics import MetricsReport, compare_runs, compute_metrics
from .model import IntervalParams, RadioProfile, SensorSpec
from .sim import RunResult, SchemeKind, run_scenario

__all__ = [
    "ConfigError",
    "IntervalParams",
    "MetricsReport",
    "RadioProfile",
    "RunResult",
    "ScenarioConfig",
    "SchemeKind",
    "SensorSpec",
    "compare_runs",
    "compute_metrics",
    "load_bundled",
    "load_config",
    "run_scenario",
]
