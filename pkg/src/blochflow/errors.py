"""Exception taxonomy shared by the library and the command line tools.

The classes mirror the process exit codes: validation failures exit 2,
numeric-gate failures exit 3, I/O failures exit 4.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Malformed input: bad shapes, non-Hermitian operators, unknown config keys."""


class DomainError(ValidationError):
    """Chart coordinates too close to a pole for the requested operation."""


class NumericGateError(RuntimeError):
    """A certified numeric invariant (unitarity, oracle agreement, norm drift) failed."""


class ResourceLimitError(ValidationError):
    """Requested problem size exceeds the configured dense-matrix limits."""
