"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


class SchemaError(ValueError):
    """CSV input that does not match the expected column layout."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (integration, quadrature, fitting)."""


class FitError(NumericalError):
    """Least-squares failure. ``last_params`` holds the last iterate, if any."""

    def __init__(self, message: str, last_params=None):
        super().__init__(message)
        self.last_params = last_params
