"""Reason-coded exceptions shared across the package.

Every rejection or failure carries a stable ``code`` string so callers
(and the HTTP layer) can branch on it without parsing messages.
"""

from __future__ import annotations


class AuroraError(Exception):
    """Base error with a machine-readable reason code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class ValidationError(AuroraError):
    """A raw record failed post validation (TEXT_TOO_LONG, MISSING_FIELD, ...)."""


class ConfigError(AuroraError):
    """Invalid configuration (overlapping partitions, bad registry, ...)."""


class FilterError(AuroraError):
    """Timeline selection failure (EMPTY_SET)."""


class CentralityError(AuroraError):
    """Graph analysis failure (DEGENERATE_COMPONENT, NODE_MISMATCH)."""


class LayoutError(AuroraError):
    """Treemap geometry failure (EMPTY_ROW, BAD_WEIGHT, MISSING_POPULATION)."""


class ServiceError(AuroraError):
    """Issue service failure (NOT_FOUND, BAD_LOCATION, BAD_EVENT, UNAUTHENTICATED)."""


class RegressionError(AuroraError):
    """Model fitting failure (NOT_CONVERGED, SINGULAR_DESIGN, SEPARATION, NESTING_VIOLATION)."""


class BotError(AuroraError):
    """Publication cycle failure (EMPTY_SET, WRONG_MINUTE)."""
