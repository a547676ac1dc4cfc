"""Deflated Newton and Gauss-Newton solvers for finding many minima of nonlinear least-squares problems."""

import json

from ._core import (
    ConfigError,
    Error,
    Problem,
    deflation_loop,
    ftrig,
    himmelblau,
    list_methods,
    list_problems,
    mn12,
    mn12_isospectral_partner,
    solve,
)
from . import _core

__all__ = [
    "ConfigError",
    "Error",
    "Problem",
    "beta_field",
    "deflation_loop",
    "ftrig",
    "himmelblau",
    "list_methods",
    "list_problems",
    "mn12",
    "mn12_isospectral_partner",
    "run_experiment",
    "solve",
]


def run_experiment(config=None, write_outputs=False, **overrides):
    """Runs an experiment described by the same keys as the CLI config file and returns the report as a dict."""
    cfg = dict(config or {})
    cfg.update(overrides)
    return json.loads(_core.run_experiment_json(json.dumps(cfg), write_outputs))


def beta_field(config=None, **overrides):
    """Returns (x, y, beta, deflated_points); beta[j, i] is at (x[i], y[j]) and NaN where undefined."""
    cfg = dict(config or {})
    cfg.update(overrides)
    return _core.beta_field_json(json.dumps(cfg))
