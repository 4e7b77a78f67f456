"""Experiment configuration, orchestration, and result serialization."""

from .config import (EXPERIMENTS, ExperimentConfig, config_hash, parse_config,
                     serialize_config)
from .experiments import (RAW_HEADER, SUMMARY_HEADER, ExperimentResult,
                          run_experiment)
from .io import read_csv_rows, write_results

__all__ = [
    "EXPERIMENTS", "ExperimentConfig", "config_hash", "parse_config",
    "serialize_config", "RAW_HEADER", "SUMMARY_HEADER", "ExperimentResult",
    "run_experiment", "read_csv_rows", "write_results",
]
