"""Python access to the hjblab solvers and experiment runner."""

import json

from . import _core
from ._core import (
    ConfigError,
    __version__,
    builtin_scenario_text,
    builtin_scenarios,
    catalog,
    counterexample_mollified_value,
    counterexample_value,
    policy_iteration,
    resolved_config,
    run,
    set_threads,
    solve_hjb,
)


def config(name_or_path):
    """Resolved scenario config as nested dicts of strings."""
    return json.loads(_core.config_json(name_or_path))


def simulate(name_or_path, seed=None, paths=None):
    return json.loads(_core.simulate(name_or_path, seed, paths))


def mollify_sweep(name_or_path):
    return json.loads(_core.mollify_sweep(name_or_path))


def counterexample_report(T=1.0, samples=((0.0, 0.0),), lo=-6.0, hi=6.0, nx=241, nt=512):
    return json.loads(_core.counterexample_report(T, list(samples), lo, hi, nx, nt))


__all__ = [
    "ConfigError",
    "__version__",
    "builtin_scenario_text",
    "builtin_scenarios",
    "catalog",
    "config",
    "counterexample_mollified_value",
    "counterexample_report",
    "counterexample_value",
    "mollify_sweep",
    "policy_iteration",
    "resolved_config",
    "run",
    "set_threads",
    "simulate",
    "solve_hjb",
]
