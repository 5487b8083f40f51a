"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class Floquet1DError(Exception):
    """Base class for all package errors."""


class ProfileError(Floquet1DError, ValueError):
    """Invalid material profile; ``field`` holds a dotted path such as ``segments[1].mu2``."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(field)
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class DegenerateStiffness(ProfileError):
    """Monoclinic stiffness with c44*c55 - c45**2 <= 0 somewhere."""


class OutOfDomain(Floquet1DError, ValueError):
    """A coordinate outside the unit cell [0, 1)."""


class ToleranceNotReached(Floquet1DError, RuntimeError):
    """Propagation did not reach the requested tolerance within max_subdivision."""


class OmegaZero(Floquet1DError, ValueError):
    """Closed-form bilayer formula is singular at omega = 0 with k != 0."""


class NotInPassband(Floquet1DError, ValueError):
    """Eigenvector formula requested where |Delta| > 1."""


class ZwsDegenerate(Floquet1DError, ArithmeticError):
    """The monodromy matrix equals +-I, so first derivatives vanish identically."""


class ScanIncomplete(Floquet1DError, RuntimeError):
    """A root scan could not certify that every root was captured."""


class NewtonDiverged(Floquet1DError, RuntimeError):
    """Newton refinement failed to converge."""


class OmegaTooHigh(Floquet1DError, ValueError):
    """Frequency is at or above the first K = pi cutoff at k = 0."""


class NotPiecewiseConstant(Floquet1DError, ValueError):
    """Operation requires a profile made of constant layers."""


class NotSupersonic(Floquet1DError, ValueError):
    """WKB approximation requested outside the supersonic regime."""


class MultipleJumps(Floquet1DError, ValueError):
    """WKB approximation supports at most one impedance discontinuity per period."""


class PreconditionOutOfRegion(Floquet1DError, ValueError):
    """A bound was requested outside the region where it is valid."""


class OnSpectrum(Floquet1DError, ArithmeticError):
    """The resolvent is singular: exp(iK) is (numerically) an eigenvalue of the monodromy."""
