"""Sweeps, configuration, output writers, validation suite and CLI."""

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config, with_overrides
from .output import emit_csv, emit_plot_script, read_csv
from .sweep import CSV_FIELDS, SweepRow, run_sweep
from .validate import ValidationReport, validate
