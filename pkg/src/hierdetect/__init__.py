"""Hierarchical, set-based detection of attacks on locally controlled interconnected systems.

Each subsystem runs a tracking controller and an unknown-input observer that
estimates its physical coupling with neighbors. A supervisor predicts the same
coupling from the references alone and flags an attack whenever the two
estimation sets stop intersecting.
"""

from . import attack, control, model, monitor, observer, setops
from .exceptions import (
    AssumptionViolation,
    ConfigError,
    DestabilizingGainError,
    DimensionError,
    EmptySetError,
    LPError,
    RegulatorError,
)
from .scenario import ScenarioConfig, load_scenario, parse_scenario
from .setops import ConstrainedZonotope
from .simulation import RunOutputs, emit, run

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "ConfigError",
    "ConstrainedZonotope",
    "DestabilizingGainError",
    "DimensionError",
    "EmptySetError",
    "LPError",
    "RegulatorError",
    "RunOutputs",
    "ScenarioConfig",
    "attack",
    "control",
    "emit",
    "load_scenario",
    "model",
    "monitor",
    "observer",
    "parse_scenario",
    "run",
    "setops",
]
