"""Experiment orchestration: configs, rate studies, persistence and the CLI."""

from .config import SCHEMA_VERSION, ExperimentConfig, load_config, save_config
from .study import RateFit, StudyResult, emit_plot_data, fit_rate, read_csv, run_cell, run_rate_study, summarize

__all__ = [
    "SCHEMA_VERSION", "ExperimentConfig", "load_config", "save_config", "RateFit", "StudyResult",
    "emit_plot_data", "fit_rate", "read_csv", "run_cell", "run_rate_study", "summarize",
]
