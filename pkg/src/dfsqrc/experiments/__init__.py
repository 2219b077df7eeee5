"""Reproducible experiment pipelines and the command-line interface."""

from .config import ExperimentConfig, load_config
from .pipelines import error_curve, learn, learn_run, make_instance, traces
from .validate import REGISTRY, run_checks
