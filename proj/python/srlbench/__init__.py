"""Desk-scale state representation learning benchmark."""

from srlbench._core import (
    NavEnv,
    collect,
    compute_gtc_report,
    default_config,
    encode,
    greedy_action,
    gtc,
    pearson,
    run_experiment,
    train_rl,
    train_srl,
)

__all__ = [
    "NavEnv",
    "collect",
    "compute_gtc_report",
    "default_config",
    "encode",
    "greedy_action",
    "gtc",
    "pearson",
    "run_experiment",
    "train_rl",
    "train_srl",
]
