"""Numerical companion for surgered gradient flows on model spaces, with the
Schwarzian, annulus and constants toolkits they rely on."""

from .errors import SurgeflowError

__version__ = "0.1.0"
__all__ = ["SurgeflowError", "__version__"]
