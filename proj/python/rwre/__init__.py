"""Quenched random walk in random environment."""

import json

from ._core import (
    ConfigError,
    DomainError,
    EligibilityError,
    GuardBreachError,
    Model,
    NonConvergenceError,
    RwreError,
    __version__,
    classify,
    ks_normal,
    lyapunov,
    oracle_increments,
    r_kappa,
    realize,
    run,
    site_moments,
)
from . import _core

__all__ = [
    "ConfigError",
    "DomainError",
    "EligibilityError",
    "GuardBreachError",
    "Model",
    "NonConvergenceError",
    "RwreError",
    "__version__",
    "classify",
    "conditions",
    "execute",
    "ks_normal",
    "lyapunov",
    "oracle_increments",
    "r_kappa",
    "realize",
    "run",
    "site_moments",
    "summary",
]


def conditions(model, gamma=4.0):
    return json.loads(_core.conditions_json(model, gamma))


def summary(model, sites=1_000_000, seed=0x5EED):
    return json.loads(_core.summary_json(model, sites, seed))


def execute(command, config, seed=None, workers=None):
    """Runs a subcommand on a config dict; returns (report, samples_csv, cdf_csv)."""
    text = config if isinstance(config, str) else json.dumps(config)
    report, samples, cdf = _core.execute(command, text, seed, workers)
    return json.loads(report), samples, cdf
