"""Experiment configuration, execution and reporting."""

from .configfile import Settings, load_config, parse_config
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    Record,
    make_spec,
    run_ber,
    run_cfo_variance,
    run_experiment,
)
from .report import emit_report, read_report
from .seeding import derive_trial_seed, trial_rng

__all__ = [
    "Settings",
    "load_config",
    "parse_config",
    "ExperimentReport",
    "ExperimentSpec",
    "Record",
    "make_spec",
    "run_ber",
    "run_cfo_variance",
    "run_experiment",
    "emit_report",
    "read_report",
    "derive_trial_seed",
    "trial_rng",
]
