"""Experiment harness: INI configs, reference profiles, suites and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config, parse_number
from .experiments import DEFAULTS, EXPERIMENTS, default_config, describe_experiment, run_experiment
from .profiles import IC_REGISTRY, make_ic, zkb_constants, zkb_profile, zkb_support

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "parse_number", "DEFAULTS", "EXPERIMENTS",
    "default_config", "describe_experiment", "run_experiment", "IC_REGISTRY", "make_ic",
    "zkb_constants", "zkb_profile", "zkb_support",
]
