"""Python bindings for the radt-lab tabular return-augmentation library."""

import json

from ._radt import (
    ConfigError,
    CoverageError,
    Dataset,
    StationaryPolicy,
    TabularMdp,
    TabularRcslPolicy,
    __version__,
    apply_shift,
    augment_exact_cdf,
    augment_mean_variance,
    chain_walk,
    collect,
    config_hash,
    fit_tabular,
    mix,
    optimal_policy,
    optimal_value,
    policy_value,
    random_mdp,
    two_state,
)
from . import _radt


def evaluate(policy, target, f_grid, n_rollouts=200, seed=0):
    """Evaluates a fitted policy in the target MDP and returns the report as a dict."""
    return json.loads(_radt.evaluate(policy, target, list(f_grid), n_rollouts, seed))


def run_experiment(config_path, overrides=(), jobs=1):
    """Runs the experiment matrix of a config file.

    Returns (matrix_csv, summary) where summary is a dict.
    """
    csv, summary = _radt.run_experiment(str(config_path), list(overrides), jobs)
    return csv, json.loads(summary)


__all__ = [
    "ConfigError",
    "CoverageError",
    "Dataset",
    "StationaryPolicy",
    "TabularMdp",
    "TabularRcslPolicy",
    "__version__",
    "apply_shift",
    "augment_exact_cdf",
    "augment_mean_variance",
    "chain_walk",
    "collect",
    "config_hash",
    "evaluate",
    "fit_tabular",
    "mix",
    "optimal_policy",
    "optimal_value",
    "policy_value",
    "random_mdp",
    "run_experiment",
    "two_state",
]
