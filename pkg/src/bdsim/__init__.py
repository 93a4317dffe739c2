"""Simulation toolkit for boundary-driven open quantum systems."""

__version__ = "0.1.0"

from . import (linalg, hilbert, lindblad, solver, observables,  # noqa: F401
               rates, scenarios)
