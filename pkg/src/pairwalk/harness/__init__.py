"""Experiment configuration, orchestration and artifact output."""

from .config import PRESETS, ExperimentSpec, load_spec, parse_spec
from .runner import run_single, run_sweep, simulate
from .validate import validate_suite

__all__ = [
    "PRESETS",
    "ExperimentSpec",
    "load_spec",
    "parse_spec",
    "run_single",
    "run_sweep",
    "simulate",
    "validate_suite",
]
