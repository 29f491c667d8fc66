"""Exceptions shared across the package."""


class SizeExceededError(Exception):
    """A feasibility guard rejected the requested instance size."""


class QuadratureError(Exception):
    """Nested quadrature failed to converge to the requested tolerance."""


class ConfigError(Exception):
    """A sweep configuration file could not be parsed."""
