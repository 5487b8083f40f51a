"""Ready-made profiles used throughout the tests, the CLI and the documentation."""

from __future__ import annotations

from .profile import Constant, MaterialProfile, Polynomial, Rational, Segment

__all__ = [
    "homogeneous",
    "cubic_graded",
    "contrast_bilayer",
    "soft_bilayer",
    "impedance_matched_bilayer",
    "impedance_matched_graded",
    "equal_speed_bilayer",
    "symmetric_trilayer",
    "BUILTIN",
]

# (1 + 3y)^2 (2 + y) / 4 in ascending powers of y
_GRADED_STIFFNESS = (0.5, 3.25, 6.0, 2.25)


def homogeneous(rho: float = 1.0, mu1: float = 1.0, mu2: float | None = None) -> MaterialProfile:
    """Uniform medium (``mu2`` defaults to ``mu1``)."""
    mu2 = mu1 if mu2 is None else mu2
    return MaterialProfile([Segment(0.0, 1.0, Constant(rho), Constant(mu1), Constant(mu2))], name="homogeneous")


def cubic_graded() -> MaterialProfile:
    """Continuously graded cell ``rho = 2 + y``, ``mu1 = mu2 = (1+3y)^2 (2+y)/4``.

    The stiffness-to-density ratio ``(1+3y)^2/4`` rises from 1/4 to 4, so the
    cell has a single impedance jump, at the period edge.
    """
    stiff = Polynomial(_GRADED_STIFFNESS)
    return MaterialProfile([Segment(0.0, 1.0, Polynomial([2.0, 1.0]), stiff, stiff)], name="cubic-graded")


def contrast_bilayer() -> MaterialProfile:
    """High-contrast bilayer: (rho, mu) = (1, 1) on [0, 1/2) and (2, 12) on [1/2, 1)."""
    return MaterialProfile.layered([(1.0, 1.0, 1.0, 0.5), (2.0, 12.0, 12.0, 0.5)], name="contrast-bilayer")


def soft_bilayer() -> MaterialProfile:
    """Weak-contrast anisotropic bilayer with unit-thickness layers (period 2).

    Layer 1: ``mu1 = 1, mu2 = 0.35, rho = 0.2``; layer 2: ``mu1 = 0.95,
    mu2 = 0.4, rho = 0.19``.  Each layer is one length unit thick, so
    ``period_scale = 2`` and a physical frequency ``omega`` corresponds to the
    cell-unit frequency ``2 omega`` (e.g. 3.4 -> 6.8, just below the first
    zone-edge cutoff ``omega_1(pi, 0) = 6.9101...`` in cell units).
    """
    base = MaterialProfile.layered([(0.2, 1.0, 0.35, 0.5), (0.19, 0.95, 0.4, 0.5)])
    return MaterialProfile(base.segments, period_scale=2.0, name="soft-bilayer")


def impedance_matched_bilayer() -> MaterialProfile:
    """Bilayer with equal normal impedance ``sqrt(rho mu1) = 2`` in both layers."""
    return MaterialProfile.layered([(1.0, 4.0, 4.0, 0.5), (4.0, 1.0, 1.0, 0.5)], name="impedance-matched-bilayer")


def impedance_matched_graded() -> MaterialProfile:
    """Graded cell with ``rho = 1 + y`` and ``mu1 = 4/(1+y)`` so that ``rho*mu1 = 4``."""
    rho = Polynomial([1.0, 1.0])
    return MaterialProfile(
        [Segment(0.0, 1.0, rho, Rational([4.0], [1.0, 1.0]), Polynomial([2.0, 0.5]))],
        name="impedance-matched-graded",
    )


def equal_speed_bilayer() -> MaterialProfile:
    """Bilayer with ``mu2/rho = 1`` everywhere and commensurate layer phases.

    Layers (rho, mu1, mu2) = (1, 1, 1) and (4, 1, 4), thickness 1/2 each; the
    layer phases are ``sqrt(w^2 - k^2)/2`` and ``sqrt(w^2 - k^2)``, so the
    monodromy is ``-I`` along the whole curve ``w^2 = 4 pi^2 + k^2``.
    """
    return MaterialProfile.layered([(1.0, 1.0, 1.0, 0.5), (4.0, 1.0, 4.0, 0.5)], name="equal-speed-bilayer")


def symmetric_trilayer() -> MaterialProfile:
    """Three constant layers, even about the cell midpoint."""
    return MaterialProfile.layered(
        [(1.0, 2.0, 1.5, 0.25), (3.0, 1.0, 2.0, 0.5), (1.0, 2.0, 1.5, 0.25)], name="symmetric-trilayer"
    )


BUILTIN = {
    "homogeneous": homogeneous,
    "cubic-graded": cubic_graded,
    "contrast-bilayer": contrast_bilayer,
    "soft-bilayer": soft_bilayer,
    "impedance-matched-bilayer": impedance_matched_bilayer,
    "impedance-matched-graded": impedance_matched_graded,
    "equal-speed-bilayer": equal_speed_bilayer,
    "symmetric-trilayer": symmetric_trilayer,
}
