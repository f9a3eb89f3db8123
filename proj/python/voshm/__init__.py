"""Value of structural health monitoring for a deteriorating bridge."""

import json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    Error,
    PrerequisiteError,
    accumulated_failure,
    damaged_support_stiffness,
    demand_exceedance,
    discount_factor,
    frequencies,
    hazard_rate,
    resolve_config,
    theta,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "PrerequisiteError",
    "accumulated_failure",
    "damaged_support_stiffness",
    "demand_exceedance",
    "discount_factor",
    "expected_cost",
    "frequencies",
    "hazard_rate",
    "resolve_config",
    "sample_scenario",
    "theta",
    "voshm",
]


def sample_scenario(seed, index=0, horizon=50.0):
    """Deterioration ground truth for one Monte Carlo scenario, as a dict."""
    return json.loads(_core.scenario_json(seed, index, horizon))


def voshm(config="", format="ini"):
    """Paired VoSHM study for a configuration given as INI (or JSON) text."""
    return json.loads(_core.voshm_json(config, format))


def expected_cost(config="", format="ini"):
    """Expected life-cycle cost of the configured mode and policy."""
    return json.loads(_core.expected_cost_json(config, format))

