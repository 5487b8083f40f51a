"""High-frequency WKB approximation of ``Delta`` and rigorous bounds as predicates.

* :func:`wkb_delta` - zero-order WKB Lyapunov function in the supersonic
  regime for profiles whose impedance has at most one periodic jump.
* :func:`bound_growth_upper` / :func:`bound_growth_lower` - the cosh bounds on
  ``|Delta|`` that fix its order of growth 1/2 in ``omega^2`` and ``k^2``.
* :func:`first_eig_bounds`, :func:`cutoff_bounds`, :func:`first_edge_bounds` -
  Rayleigh-quotient bounds on the first eigenvalue ``omega_1^2(K, k)``, the
  first cutoffs at the centre/edge of the Brillouin zone and the first
  isofrequency edge ``k_{1,0}(omega)``.

Every bound returns a :class:`BoundReport`; a bound is *satisfied* when its
slack, normalised by ``max(1, |bound|)``, is at least ``-1e-9`` (the bounds are
attained for some profiles, so equality must pass).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import MultipleJumps, NotSupersonic, PreconditionOutOfRegion
from .lyapunov import delta_values
from .matricant import DEFAULT_CONFIG, QuadratureConfig
from .profile import MaterialProfile, average, extremum

__all__ = [
    "BoundReport",
    "BOUND_SLACK",
    "impedance_jumps",
    "wkb_delta",
    "bound_growth_upper",
    "bound_growth_lower",
    "first_eig_bounds",
    "cutoff_bounds",
    "first_edge_bounds",
]

BOUND_SLACK = -1e-9
JUMP_TOL = 1e-9


@dataclass
class BoundReport:
    """Outcome of one inequality check.

    ``which`` names the inequality: ``growth_upper``, ``growth_lower``,
    ``first_eig_lower``, ``first_eig_upper``, ``cutoff_center``,
    ``cutoff_edge`` or ``first_edge_bracket``.  ``slack`` is the signed
    margin (positive when satisfied with room to spare) divided by
    ``max(1, |bound_value|)``.
    """

    which: str
    point: tuple[complex, complex]
    bound_value: float
    actual_value: float
    slack: float
    satisfied: bool
    extra: dict | None = None


def _report(which, point, bound, actual, margin, extra=None) -> BoundReport:
    slack = float(margin) / max(1.0, abs(float(bound)))
    return BoundReport(which, point, float(bound), float(actual), slack, bool(slack >= BOUND_SLACK), extra)


# --------------------------------------------------------------------------
# WKB
# --------------------------------------------------------------------------


def _impedance(rho, mu1, mu2, omega, k):
    return np.sqrt(rho * mu1) * np.sqrt(1.0 - mu2 * k * k / (rho * omega * omega))


def impedance_jumps(profile: MaterialProfile, omega: float, k: float, tol: float = JUMP_TOL) -> list[tuple[float, float]]:
    """Points ``y_d`` where the periodic impedance jumps, with ``[Z] = Z(y_d^-)/Z(y_d^+)``.

    The period edge (``y = 0 = 1``) is included, comparing ``Z(1^-)`` with
    ``Z(0^+)``.
    """
    segs = profile.segments
    out = []
    for i, seg in enumerate(segs):
        prev = segs[i - 1]
        left = prev.end if i > 0 else 1.0
        zl = _impedance(*(float(getattr(prev, n)(left)) for n in ("rho", "mu1", "mu2")), omega, k)
        zr = _impedance(*(float(getattr(seg, n)(seg.start)) for n in ("rho", "mu1", "mu2")), omega, k)
        if abs(zl - zr) > tol * max(abs(zl), abs(zr)):
            out.append((float(seg.start), float(zl / zr)))
    return out


def wkb_delta(profile: MaterialProfile, omega: float, k: float) -> float:
    """Zero-order WKB approximation of ``Delta(omega^2, k^2)``.

    ``1/2 ([Z]^(1/2) + [Z]^(-1/2)) cos(int_0^1 sqrt((rho w^2 - mu2 k^2)/mu1) dy)``
    with ``Z = sqrt(rho mu1) sqrt(1 - mu2 k^2 / (rho w^2))`` and ``[Z]`` its
    relative jump at the single periodic discontinuity (1 if continuous).

    Raises
    ------
    NotSupersonic
        If ``omega^2 <= k^2 max(mu2/rho)`` (the impedance is not real).
    MultipleJumps
        If the impedance jumps at more than one point per period.
    """
    omega, k = float(omega), float(k)
    if omega <= 0 or omega * omega <= k * k * extremum(profile, "mu2/rho")[1]:
        raise NotSupersonic(f"omega={omega} is not supersonic at k={k}")
    jumps = impedance_jumps(profile, omega, k)
    if len(jumps) > 1:
        raise MultipleJumps(f"impedance jumps at {len(jumps)} points: {[j[0] for j in jumps]}")
    ratio = jumps[0][1] if jumps else 1.0
    phase = 0.0
    w2, k2 = omega * omega, k * k
    for seg in profile.segments:
        f = lambda y, s=seg: np.sqrt((s.rho(y) * w2 - s.mu2(y) * k2) / s.mu1(y))
        if seg.is_constant:
            phase += f(seg.start) * (seg.end - seg.start)
        else:
            val, _ = integrate.quad(f, seg.start, seg.end, epsabs=1e-13, epsrel=1e-13, limit=200, points=seg.knots() or None)
            phase += val
    return float(0.5 * (np.sqrt(ratio) + 1.0 / np.sqrt(ratio)) * np.cos(phase))


# --------------------------------------------------------------------------
# growth bounds
# --------------------------------------------------------------------------


def bound_growth_upper(
    profile: MaterialProfile, omega2: complex, k2: complex, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """``|Delta| <= cosh sqrt((max mu2 |k^2| + max rho |omega^2|) / min mu1)`` for complex arguments."""
    mu1_min = extremum(profile, "mu1")[0]
    arg = (extremum(profile, "mu2")[1] * abs(k2) + extremum(profile, "rho")[1] * abs(omega2)) / mu1_min
    bound = np.cosh(np.sqrt(arg))
    actual = abs(complex(delta_values(profile, [omega2], [k2], cfg)[0]))
    return _report("growth_upper", (complex(omega2), complex(k2)), bound, actual, bound - actual)


def bound_growth_lower(
    profile: MaterialProfile, omega2: float, k2: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """``Delta >= cosh sqrt((min mu2 k^2 - max rho omega^2) / max mu1)`` for ``k^2 >= max rho omega^2 / min mu2``.

    Raises
    ------
    PreconditionOutOfRegion
        If the arguments are complex or outside the region of validity.
    """
    if np.iscomplexobj(omega2) and np.imag(omega2) != 0 or np.iscomplexobj(k2) and np.imag(k2) != 0:
        raise PreconditionOutOfRegion("the lower growth bound needs real omega^2 and k^2")
    omega2, k2 = float(np.real(omega2)), float(np.real(k2))
    mu2_min = extremum(profile, "mu2")[0]
    rho_max = extremum(profile, "rho")[1]
    if k2 < rho_max * omega2 / mu2_min * (1.0 - 1e-14):
        raise PreconditionOutOfRegion(f"k^2={k2} below max(rho) omega^2 / min(mu2) = {rho_max * omega2 / mu2_min}")
    arg = max(mu2_min * k2 - rho_max * omega2, 0.0) / extremum(profile, "mu1")[1]
    bound = np.cosh(np.sqrt(arg))
    actual = float(delta_values(profile, [omega2], [k2], cfg)[0].real)
    return _report("growth_lower", (complex(omega2), complex(k2)), bound, actual, actual - bound)


# --------------------------------------------------------------------------
# first-eigenvalue bounds
# --------------------------------------------------------------------------


def _first_omega(profile, K, k, cfg):
    from .spectrum import branch_omega

    return branch_omega(profile, K, k, 1, cfg).omega


def first_eig_bounds(
    profile: MaterialProfile,
    K: float,
    k: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    omega1: float | None = None,
) -> tuple[BoundReport, BoundReport]:
    """Bounds ``k^2 min(mu2/rho) <= omega_1^2(K, k) <= (<mu1> K^2 + <mu2> k^2) / <rho>``.

    ``omega1`` may be supplied to skip the branch computation.
    """
    K = float(K)
    if abs(K) > np.pi + 1e-12:
        raise ValueError("K must lie in [-pi, pi]")
    w1 = _first_omega(profile, K, k, cfg) if omega1 is None else float(omega1)
    w2 = w1 * w1
    lower = k * k * extremum(profile, "mu2/rho")[0]
    rho = average(profile, "rho")
    upper = (average(profile, "mu1") * K * K + average(profile, "mu2") * k * k) / rho
    point = (complex(w2), complex(k * k))
    extra = {"K": K, "k": float(k), "omega1": w1}
    return (
        _report("first_eig_lower", point, lower, w2, w2 - lower, extra),
        _report("first_eig_upper", point, upper, w2, upper - w2, extra),
    )


def cutoff_bounds(profile: MaterialProfile, k: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[BoundReport, BoundReport]:
    """First cutoffs at the zone centre and edge.

    ``k min sqrt(mu2/rho) <= omega_1(0, k) <= k sqrt(<mu2>/<rho>)`` and
    ``omega_1(0, k) < omega_1(pi, k) <= sqrt((<mu1> pi^2 + <mu2> k^2) / <rho>)``.
    The centre report's slack is the smaller of its two margins; the edge
    report requires the strict ordering as well.
    """
    k = abs(float(k))
    w0 = _first_omega(profile, 0.0, k, cfg)
    wpi = _first_omega(profile, np.pi, k, cfg)
    rho, mu1, mu2 = (average(profile, n) for n in ("rho", "mu1", "mu2"))
    lo_c = k * np.sqrt(extremum(profile, "mu2/rho")[0])
    hi_c = k * np.sqrt(mu2 / rho)
    centre = _report(
        "cutoff_center", (complex(w0 * w0), complex(k * k)), hi_c, w0, min(w0 - lo_c, hi_c - w0),
        {"lower": float(lo_c), "upper": float(hi_c)},
    )
    hi_e = np.sqrt((mu1 * np.pi**2 + mu2 * k * k) / rho)
    edge = _report(
        "cutoff_edge", (complex(wpi * wpi), complex(k * k)), hi_e, wpi, hi_e - wpi,
        {"omega1_center": w0, "ordered": bool(w0 < wpi)},
    )
    if not w0 < wpi:
        edge.satisfied = False
    return centre, edge


def first_edge_bounds(profile: MaterialProfile, omega: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> BoundReport:
    """``omega sqrt(<rho>/<mu2>) <= k_{1,0}(omega) <= omega max sqrt(rho/mu2)``.

    ``k_{1,0}`` is the ``k`` at which the first centre-zone branch
    ``omega_1(0, k)`` reaches ``omega``, i.e. the largest root of
    ``Delta(omega^2, k^2) = 1`` (the only one below ``omega_1(pi, 0)``).  It is
    located independently of the bracket, from the isofrequency scan.
    """
    from .isofreq import iso_branches

    omega = float(omega)
    lo = omega * np.sqrt(average(profile, "rho") / average(profile, "mu2"))
    hi = omega * np.sqrt(extremum(profile, "rho/mu2")[1])
    edges = [kk for b in iso_branches(profile, omega, cfg=cfg, sample=False) for kk, m in b.edges if m == 0 and kk > 0]
    k10 = max(edges)
    return _report(
        "first_edge_bracket", (complex(omega * omega), complex(k10 * k10)), hi, k10, min(k10 - lo, hi - k10),
        {"lower": float(lo), "upper": float(hi)},
    )
