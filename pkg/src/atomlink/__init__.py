"""Simulator for trapped-ion modules linked by tweezer-shuttled neutral atoms."""

from atomlink.errors import ConfigurationError

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "__version__"]
