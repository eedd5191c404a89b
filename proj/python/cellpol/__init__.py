"""Bulk-surface cell polarization on the unit sphere.

Configuration values are passed as a dict of dotted keys, e.g.
``{"grid.L": "8", "model.D": "5"}``; numbers may be given as numbers.
"""

import json

from ._cellpol import (
    ConfigError,
    DomainError,
    Error,
    IoError,
    __version__,
    config_defaults,
    config_keys,
    grid,
)
from . import _cellpol

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "IoError",
    "__version__",
    "config_defaults",
    "config_keys",
    "config_hash",
    "critical_mass",
    "grid",
    "obstacle",
    "run",
    "steady",
]


def _strings(overrides):
    return {str(k): str(v) for k, v in (overrides or {}).items()}


def config_hash(overrides=None):
    return _cellpol.config_hash(_strings(overrides))


def run(command, overrides=None, out="out", workers=1):
    """Run a CLI command; returns (exit_code, summary dict, output files, message)."""
    code, summary, outputs, message = _cellpol.run(command, _strings(overrides), str(out), int(workers))
    return code, json.loads(summary), outputs, message


def critical_mass(overrides=None, ell=0.0):
    return _cellpol.critical_mass(_strings(overrides), float(ell))


def obstacle(overrides=None, mass=1.0, ell=0.0):
    """Obstacle solution of the given mass (a4 = 1 units)."""
    return _cellpol.obstacle(_strings(overrides), float(mass), float(ell))


def steady(overrides=None):
    return _cellpol.steady(_strings(overrides))
