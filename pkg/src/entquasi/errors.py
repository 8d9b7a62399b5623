"""Exception types shared across the package."""

from __future__ import annotations


class EntQuasiError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(EntQuasiError):
    """An object's shape does not match the declared factor dimensions."""


class NotHermitian(EntQuasiError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class NotUnitTrace(EntQuasiError):
    """Trace of a density matrix deviates from one beyond tolerance."""


class NotPSD(EntQuasiError):
    """Density matrix has an eigenvalue below the negativity tolerance."""


class NotOrthogonal(EntQuasiError):
    """Interference expansion requires factor-wise orthogonal inputs."""


class NotOrthogonalSelection(EntQuasiError):
    """Residual split requires mutually orthogonal selected states."""


class NonConvergence(EntQuasiError):
    """Alternating iteration failed to settle on a certified solution."""


class EmptySolutionSet(EntQuasiError):
    """No usable separability eigenvalue solutions were supplied."""


class InconsistentSystem(EntQuasiError):
    """The weight system has no solution at tolerance; the solution set
    backing it is presumably incomplete."""

    def __init__(self, message: str, residual: float, system=None):
        super().__init__(message)
        self.residual = residual
        self.system = system


class EigensolverFailure(EntQuasiError):
    """An underlying dense eigensolver or SVD did not converge."""


class UnsupportedDims(EntQuasiError):
    """Operation is only defined for specific factor dimensions."""


class MalformedInput(EntQuasiError):
    """A JSON document does not follow the documented schema."""
