"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical failures exit 2, invariant violations exit 3.
"""

from __future__ import annotations


class HeatlabError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(HeatlabError, ValueError):
    """Malformed or inconsistent task configuration."""


class PreconditionError(HeatlabError, ValueError):
    """A documented mathematical precondition does not hold for the inputs."""


class UnsupportedError(HeatlabError, ValueError):
    """The operation is not defined for this model (wrong dimension, domain)."""


class NumericFailure(HeatlabError, ArithmeticError):
    """An iteration or quadrature failed to converge, or produced a divergent
    quantity where a finite one is required."""
