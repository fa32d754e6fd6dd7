"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class RMHDError(Exception):
    """Base class for all errors raised by :mod:`pcprmhd`."""


class InvalidPrimitive(RMHDError, ValueError):
    """A primitive state violates rho > 0, p > 0 or |v| < 1."""


class OutsideDomain(RMHDError, ValueError):
    """A recovery-equation argument lies outside the region where W is real."""


class PreconditionViolated(RMHDError, ValueError):
    """An operation was called on data that fails its documented precondition."""


class NotAdmissible(RMHDError, ValueError):
    """A conservative state is outside the admissible set.

    Attributes:
        indices: Flat indices (or cell indices) of the offending states, if known.
        step: Time-step number at which the failure was detected, if known.
    """

    def __init__(self, message: str, indices=None, step: int | None = None):
        super().__init__(message)
        self.indices = indices
        self.step = step


class NoConvergence(RMHDError, RuntimeError):
    """The pressure-recovery iteration failed to meet its residual tolerance."""


class InvalidDirection(RMHDError, ValueError):
    """A direction parameter v* does not satisfy |v*| < 1."""


class NonpositiveScale(RMHDError, ValueError):
    """A scaling factor is not strictly positive."""


class NotOrthogonal(RMHDError, ValueError):
    """A matrix expected to be orthogonal is not."""


class NotUnitNormal(RMHDError, ValueError):
    """An edge normal is not a unit vector."""


class AverageNotAdmissible(RMHDError, ValueError):
    """A cell average handed to the limiter lies outside the eps-strengthened set."""


class CflTooLarge(RMHDError, ValueError):
    """The requested CFL number exceeds the bound that guarantees admissibility."""


class IndexOutOfRange(RMHDError, IndexError):
    """A cell index lies outside the interior of the grid."""


class WeightMismatch(RMHDError, ValueError):
    """Quadrature weights are inconsistent with the supplied trace values."""


class ConstraintInfeasible(RMHDError, ValueError):
    """A sampled configuration cannot satisfy the discrete divergence constraint."""


class NoExactSolution(RMHDError, ValueError):
    """A convergence study was requested for a preset without a closed-form solution."""


class ConfigError(RMHDError, ValueError):
    """A run configuration is malformed or inconsistent."""
