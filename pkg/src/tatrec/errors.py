"""Typed exceptions shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition.

    The message names the offending field so CLI users can fix their
    config without reading a traceback.
    """


class CFLError(ValidationError):
    """Raised when a wave-solver time step violates the stability bound."""
