"""Exception types shared across the package.

The CLI maps ValidationError to exit code 2 and NumericalError to exit
code 3; library callers can catch either directly.
"""


class CptrError(Exception):
    """Base class for all package errors."""


class ValidationError(CptrError):
    """Bad inputs: malformed files, schema mismatches, violated preconditions."""


class NumericalError(CptrError):
    """Estimation failures: rank deficiency, non-convergence, degenerate data."""
