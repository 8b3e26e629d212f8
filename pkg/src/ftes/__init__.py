"""Fixed-time gradient and Newton extremum seeking: controllers, bounds and simulation."""

from .sim import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
