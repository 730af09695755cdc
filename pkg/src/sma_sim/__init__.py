"""Simulation and characterization of PWM-driven SMA-wire microactuators."""

from ._kernel import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
