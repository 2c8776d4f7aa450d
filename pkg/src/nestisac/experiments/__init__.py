"""Experiment configuration, Monte Carlo runners, output writers and CLI."""

from .config import ExperimentConfig, load_config, parse_config_text, resolve
from .runner import ResultTable, run, run_custom, run_fig3, run_fig4, run_fig5

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
    "resolve",
    "ResultTable",
    "run",
    "run_fig3",
    "run_fig4",
    "run_fig5",
    "run_custom",
]
