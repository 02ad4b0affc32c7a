"""Experiment configs, the cross-validated sweep and result plots."""

from .config import AttributionConfig, ConfigError, ExperimentConfig, build_dataset, load_config
from .sweep import (BIAS_COLUMNS, RESULT_COLUMNS, BiasRow, MetricsRow, ResultsTable,
                    fold_indices, load_results, run_cell, run_group, run_sweep, write_results)

__all__ = [
    "AttributionConfig", "ConfigError", "ExperimentConfig", "build_dataset", "load_config",
    "BIAS_COLUMNS", "RESULT_COLUMNS", "BiasRow", "MetricsRow", "ResultsTable", "fold_indices",
    "load_results", "run_cell", "run_group", "run_sweep", "write_results",
]
