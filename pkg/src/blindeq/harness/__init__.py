"""Experiment driver: configuration and seeded reproduction runs."""

from .config import ExperimentConfig, comparison_defaults, dump_config, load_config, save_config
from .experiments import run_closed_form_report, run_gaussianity, run_comparison, run_sweep

__all__ = [
    "ExperimentConfig",
    "dump_config",
    "comparison_defaults",
    "load_config",
    "run_closed_form_report",
    "run_gaussianity",
    "run_comparison",
    "run_sweep",
    "save_config",
]
