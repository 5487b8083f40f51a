"""Isofrequency curves ``K(k) = arccos Delta(omega^2, k^2)`` at fixed ``omega``.

At fixed ``omega`` the Lyapunov function is an entire function of ``s = k^2``
whose zeros are real and bounded above, so between two consecutive zeros it
has exactly one extremum and beyond the largest zero it increases
monotonically to ``+inf``.  The half-line ``s >= 0`` therefore splits into
monotone pieces bounded by the extrema of ``Delta(s)``; every piece whose range
overlaps ``(-1, 1)`` carries exactly one real branch ``K_j(k)``, and the
branches are numbered by increasing ``k``.  Edge points ``k_{j,m}`` are the
roots of ``Delta = (-1)^m`` on the piece; a piece end where ``|Delta|`` only
touches 1 is a zero-width stopband and is shared by two branches.

The scan is confined to ``k^2 <= max(rho) omega^2 / min(mu2)`` beyond which
``Delta >= 1`` holds identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

from .errors import NotInPassband, NotPiecewiseConstant, OmegaTooHigh, ScanIncomplete
from .lyapunov import d2_delta_all, d_delta_integral, delta_values
from .matricant import DEFAULT_CONFIG, MatricantTable, QuadratureConfig
from .profile import MaterialProfile, average, extremum
from .spectrum import TANGENCY_TOL, _extrema_between, _scan_cfg, _sign_changes, _solve_brackets, branch_omega

__all__ = [
    "IsoBranch",
    "ConvexityCertificate",
    "EdgeBehavior",
    "iso_branches",
    "dK_dk",
    "convexity_certificate",
    "truncated_series_isofreq",
    "first_cutoff_pi",
    "truncated_delta_polynomial",
]

EDGE_TOL = 1e-9
ZWS_MATRIX_TOL = 1e-6
_K_STEP = np.pi / 64


@dataclass
class ConvexityCertificate:
    """Sampled curvature numerator ``h(k) = Delta Delta_k^2 + (1 - Delta^2) Delta_kk``.

    ``K_1''(k) = -h / sin^3 K_1``, so ``h > 0`` on ``(0, k_{1,0})`` means the
    closed branch bends towards the ``k`` axis everywhere.  ``derivatives_positive``
    records positivity of ``dDelta/d(k^2)`` and ``d^2Delta/d(k^2)^2`` on the
    sampled ``k^2``; ``bounds`` is ``(lower, k_10, upper)`` of the
    average/extremum bracket of the first edge.
    """

    omega: float
    k: np.ndarray
    h: np.ndarray
    min_h: float
    passed: bool
    k10: float
    bounds: tuple[float, float, float] = (np.nan, np.nan, np.nan)
    bounds_ok: bool = True
    derivatives_positive: bool = True
    min_d1: float = np.nan
    min_d2: float = np.nan
    K: np.ndarray | None = None


@dataclass
class IsoBranch:
    """One real isofrequency branch ``K_j(k)`` with ``K`` in ``[0, pi]``.

    ``points`` is an ``(n, 2)`` array of ``(k, K)`` ordered by ``k``; ``edges``
    lists ``(k_{j,m}, m)`` where the branch reaches ``K = pi m``; ``zws_edges``
    the subset of those edge abscissae that are zero-width stopbands.  A closed
    branch is represented by its ``k >= 0`` half.
    """

    j: int
    omega: float
    points: np.ndarray
    edges: list[tuple[float, int]]
    closed: bool
    zws_edges: list[float] = field(default_factory=list)
    k_range: tuple[float, float] = (0.0, 0.0)
    convexity: ConvexityCertificate | None = None

    @property
    def k(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def K(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass
class EdgeBehavior:
    """Slope information where ``dK/dk = -Delta_k / sin K`` is not usable.

    ``case`` is one of

    * ``"vertical"`` - non-degenerate edge ``k_{j,m} != 0``: ``dk/dK = 0`` and
      ``d2k_dK2 = (-1)^(m+1) / Delta_k``;
    * ``"zws"`` - zero-width stopband edge: finite one-sided slopes
      ``slope_left``/``slope_right`` of magnitude ``sqrt((-1)^(m+1) Delta_kk)``;
    * ``"origin"`` - ``k = 0`` inside a passband: horizontal tangent with
      ``d2K_dk2 = -2 Delta_{k^2} / sin K``;
    * ``"origin-edge"`` - ``k = 0`` at ``K = pi m``: one-sided slope
      ``sqrt(2 (-1)^(m+1) Delta_{k^2})`` (a kink of the even extension);
    * ``"origin-zws"`` - ``k = 0`` at a zero-width stopband: zero slope and
      ``d2K_dk2 = sqrt(2 (-1)^(m+1) Delta_{k^2 k^2})``.
    """

    case: str
    m: int | None = None
    dK_dk: float = np.nan
    d2k_dK2: float = np.nan
    d2K_dk2: float = np.nan
    slope_left: float = np.nan
    slope_right: float = np.nan


# --------------------------------------------------------------------------
# Delta along k at fixed omega
# --------------------------------------------------------------------------


def _delta_s(profile, omega, s, cfg, chunk: int = 32) -> np.ndarray:
    """``Delta(omega^2, s)`` for an array of ``s = k^2`` (batched by size)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    order = np.argsort(s)
    out = np.empty(s.size)
    srt = s[order]
    vals = np.empty(s.size)
    for i in range(0, srt.size, chunk):
        vals[i : i + chunk] = delta_values(profile, omega * omega, srt[i : i + chunk], cfg, chunk=chunk).real
    out[order] = vals
    return out


def _at_omega(profile, omega):
    return lambda s, cfg: _delta_s(profile, omega, s, cfg)


def _k_top(profile: MaterialProfile, omega: float) -> float:
    """``k`` beyond which ``Delta(omega^2, k^2) >= 1``: ``omega sqrt(max rho / min mu2)``."""
    return float(omega * np.sqrt(extremum(profile, "rho")[1] / extremum(profile, "mu2")[0]))


def _k_phase(profile: MaterialProfile, omega: float, ks, n: int = 512) -> np.ndarray:
    y = (np.arange(n) + 0.5) / n
    rho, mu1, mu2 = profile.coefficients(y)
    k2 = np.asarray(ks, dtype=float)[:, None] ** 2
    return np.mean(np.sqrt(np.maximum(rho * omega * omega - mu2 * k2, 0.0) / mu1), axis=1)


def _k_grid(profile, omega, k_end, base: int = 64) -> np.ndarray:
    """Grid in ``k`` advancing the WKB phase by at most ``pi/8`` per step."""
    fine = np.linspace(0.0, k_end, 8 * base + 1)
    ph = _k_phase(profile, omega, fine)
    level = np.floor(ph / (np.pi / 8))
    keep = np.zeros(fine.size, dtype=bool)
    keep[1:] = level[1:] != level[:-1]
    keep[::8] = True
    keep[-1] = True
    return fine[keep]


@dataclass
class _KSkeleton:
    """Monotone pieces of ``Delta(s)``, ``s = k^2``, on ``[0, s_top]``."""

    profile: MaterialProfile
    omega: float
    cfg: QuadratureConfig
    bounds: np.ndarray  # piece boundaries in s, starting at 0, ending at s_top
    values: np.ndarray  # Delta at the boundaries
    interior: np.ndarray  # flags: boundary is an interior extremum

    def tangent(self, i: int) -> bool:
        return bool(self.interior[i] and abs(abs(self.values[i]) - 1.0) <= TANGENCY_TOL)


def _k_skeleton(profile, omega, cfg, max_refine: int = 4) -> _KSkeleton:
    scan = _scan_cfg(cfg)
    fun = _at_omega(profile, omega)
    k_top = _k_top(profile, omega)
    s_top = k_top * k_top
    for _ in range(20):
        d_top = float(fun([s_top], cfg)[0])
        if d_top > 1.0 + 1e-6:
            break
        s_top *= 1.05
    base = 64
    for _ in range(max_refine + 1):
        k = _k_grid(profile, omega, np.sqrt(s_top), base)
        s = k * k
        vals = fun(s, scan)
        idx = _sign_changes(vals)
        if idx.size:
            zeros = _solve_brackets(fun, 0.0, s[idx], s[idx + 1], vals[idx], vals[idx + 1], scan, ftol=1e-9)
        else:
            zeros = np.empty(0)
        ext_a, ext_b = list(zeros[:-1]), list(zeros[1:])
        # possible extremum of |Delta| before the first zero: |Delta| initially rising
        pre = False
        if zeros.size:
            d0 = complex(d_delta_integral(profile, omega * omega, 0.0, cfg).d_dk2).real
            pre = float(vals[0]) * d0 > 0
            if pre:
                ext_a.insert(0, 0.0)
                ext_b.insert(0, float(zeros[0]))
        if ext_a:
            ext, dext = _extrema_between(fun, np.array(ext_a), np.array(ext_b), s, vals, cfg)
        else:
            ext, dext = np.empty(0), np.empty(0)
        between = dext[1:] if pre else dext
        if np.all(np.abs(between) >= 1.0 - 1e-7) and _monotone_tail(s, vals, zeros):
            break
        base *= 2
    else:
        raise ScanIncomplete(f"isofrequency scan at omega={omega} could not certify the extrema of Delta(k)")
    d_zero = float(fun([0.0], cfg)[0])
    bounds = np.concatenate([[0.0], ext, [s_top]])
    values = np.concatenate([[d_zero], dext, [d_top]])
    interior = np.zeros(bounds.size, dtype=bool)
    interior[1:-1] = True
    return _KSkeleton(profile, omega, cfg, bounds, values, interior)


def _monotone_tail(s, vals, zeros) -> bool:
    start = zeros[-1] if zeros.size else 0.0
    tail = vals[s > start]
    return bool(np.all(np.diff(tail) > -1e-12 * np.maximum(1.0, np.abs(tail[1:]))))


# --------------------------------------------------------------------------
# branches
# --------------------------------------------------------------------------


def first_cutoff_pi(profile: MaterialProfile, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``omega_1(pi, 0)``: the first cutoff at the Brillouin-zone edge at ``k = 0``."""
    return branch_omega(profile, np.pi, 0.0, 1, cfg).omega


def _K_of(d):
    return np.arccos(np.clip(d, -1.0, 1.0))


def _sample_branch(profile, omega, cfg, k_lo, k_hi, K_lo, K_hi, n0: int = 33, max_points: int = 4000):
    """Adaptive ``(k, K)`` samples with bounded chord length in both coordinates."""
    span = k_hi - k_lo
    if span <= 0:
        return np.array([[k_lo, K_lo]])
    k = np.linspace(k_lo, k_hi, n0)
    K = np.empty(n0)
    K[1:-1] = _K_of(_delta_s(profile, omega, k[1:-1] ** 2, cfg))
    K[0], K[-1] = K_lo, K_hi
    for _ in range(40):
        gap_k = np.diff(k)
        bad = (np.abs(np.diff(K)) > _K_STEP) & (gap_k > 1e-12 * max(1.0, k_hi))
        bad |= gap_k > span / (n0 - 1) * 1.0000001
        if not np.any(bad) or k.size >= max_points:
            break
        mids = 0.5 * (k[:-1] + k[1:])[bad]
        Km = _K_of(_delta_s(profile, omega, mids**2, cfg))
        k = np.concatenate([k, mids])
        K = np.concatenate([K, Km])
        order = np.argsort(k)
        k, K = k[order], K[order]
    return np.column_stack([k, K])


def iso_branches(
    profile: MaterialProfile,
    omega: float,
    k_max: float | None = None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    sample: bool = True,
) -> list[IsoBranch]:
    """All real branches ``K_j(k)``, ``k >= 0``, at fixed ``omega > 0``.

    Parameters
    ----------
    k_max : float, optional
        Truncate the branches at this ``k`` (default: no truncation; real
        branches cannot extend past ``omega sqrt(max rho / min mu2)``).
    sample : bool
        Whether to compute adaptive ``(k, K)`` samples; otherwise ``points``
        holds just the branch end points.

    Raises
    ------
    ValueError
        If ``omega <= 0``.
    ScanIncomplete
        If the extrema of ``Delta(k)`` cannot be certified.
    """
    omega = float(omega)
    if omega <= 0:
        raise ValueError("omega must be positive")
    sk = _k_skeleton(profile, omega, cfg)
    fun = _at_omega(profile, omega)
    branches: list[IsoBranch] = []
    pending = []  # (piece index, which end, target)
    pieces = []
    for i in range(sk.bounds.size - 1):
        a, b = sk.bounds[i], sk.bounds[i + 1]
        da, db = sk.values[i], sk.values[i + 1]
        ta, tb = sk.tangent(i), sk.tangent(i + 1)
        if ta:
            da = float(np.sign(da))
        if tb:
            db = float(np.sign(db))
        lo_d, hi_d = min(da, db), max(da, db)
        if max(lo_d, -1.0) >= min(hi_d, 1.0):
            continue
        ends = []
        for s_end, d_end, tan, other in ((a, da, ta, db), (b, db, tb, da)):
            if abs(d_end) <= 1.0:
                ends.append([s_end, d_end, tan, tan or abs(abs(d_end) - 1.0) <= EDGE_TOL])
            else:
                target = float(np.sign(d_end))
                ends.append([None, target, False, True])
                pending.append((len(pieces), len(ends) - 1, target, a, b, sk.values[i] - target, sk.values[i + 1] - target))
        pieces.append(ends)
    if pending:
        arr = np.array([p[2:] for p in pending], dtype=float)
        roots = _solve_brackets(fun, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], cfg)
        for (pi, ei, *_), r in zip(pending, roots):
            pieces[pi][ei][0] = float(r)
    w1pi = None
    for j, ((s_lo, d_lo, t_lo, e_lo), (s_hi, d_hi, t_hi, e_hi)) in enumerate(pieces, start=1):
        k_lo, k_hi = float(np.sqrt(s_lo)), float(np.sqrt(s_hi))
        edges, zws = [], []
        for kk, dd, tan, is_edge in ((k_lo, d_lo, t_lo, e_lo), (k_hi, d_hi, t_hi, e_hi)):
            if is_edge:
                edges.append((kk, 0 if dd > 0 else 1))
                if tan:
                    zws.append(kk)
        K_lo = float(_K_of(d_lo))
        K_hi = float(_K_of(d_hi))
        if k_max is not None and k_hi > k_max:
            if k_lo >= k_max:
                continue
            k_hi = float(k_max)
            K_hi = float(_K_of(fun([k_hi * k_hi], cfg)[0]))
            edges = [e for e in edges if e[0] <= k_max]
        closed = False
        if j == 1 and k_lo == 0.0:
            if w1pi is None:
                w1pi = first_cutoff_pi(profile, cfg)
            closed = omega < w1pi
        if sample:
            pts = _sample_branch(profile, omega, cfg, k_lo, k_hi, K_lo, K_hi)
        else:
            pts = np.array([[k_lo, K_lo], [k_hi, K_hi]])
        branches.append(IsoBranch(j, omega, pts, edges, closed, zws, (k_lo, k_hi)))
    return branches


# --------------------------------------------------------------------------
# slopes
# --------------------------------------------------------------------------


def _derivs(profile, omega, k, cfg):
    lam, kap = omega * omega, k * k
    tab = MatricantTable(profile, lam, kap, cfg)
    d = float(tab.delta.real)
    d1 = float(complex(d_delta_integral(profile, lam, kap, cfg, table=tab).d_dk2).real)
    return tab, d, d1


def dK_dk(
    profile: MaterialProfile,
    omega: float,
    k: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    edge_tol: float = EDGE_TOL,
):
    """Slope of a real isofrequency branch at ``(omega, k)``.

    Returns ``-Delta_k / sin K`` (a float) at interior points, and an
    :class:`EdgeBehavior` at ``k = 0`` and at edges ``Delta = +-1``.  Here
    ``Delta_k = 2 k Delta_{k^2}`` and ``Delta_kk = 2 Delta_{k^2} + 4 k^2
    Delta_{k^2 k^2}``.  At a zero-width stopband ``K - pi m`` behaves like
    ``+-sqrt((-1)^(m+1) Delta_kk) |k - k_e|``; the one-sided slopes follow
    from ``K`` staying in ``[0, pi]``: for ``m = 0`` the left slope is
    negative and the right slope positive, for ``m = 1`` the reverse.

    Raises
    ------
    NotInPassband
        If ``|Delta| > 1`` at the point (no real branch there).
    """
    omega, k = float(omega), abs(float(k))
    lam = omega * omega
    tab, d, d1 = _derivs(profile, omega, k, cfg)
    at_edge = abs(abs(d) - 1.0) <= edge_tol
    if abs(d) > 1.0 and not at_edge:
        raise NotInPassband(f"|Delta| = {abs(d):.6g} > 1 at omega={omega}, k={k}")
    m = (0 if d > 0 else 1) if at_edge else None
    if not at_edge:
        sinK = np.sqrt(1.0 - d * d)
        if k == 0.0:
            return EdgeBehavior("origin", None, 0.0, np.nan, -2.0 * d1 / sinK)
        return float(-2.0 * k * d1 / sinK)
    sgn = (-1.0) ** (m + 1)
    is_zws = float(np.max(np.abs(tab.M - (1 if m == 0 else -1) * np.eye(2)))) <= ZWS_MATRIX_TOL
    if k == 0.0:
        if is_zws:
            d2 = float(complex(d2_delta_all(profile, lam, 0.0, cfg, table=tab)["k2k2"]).real)
            return EdgeBehavior("origin-zws", m, 0.0, np.nan, float(np.sqrt(max(2.0 * sgn * d2, 0.0))))
        val = 2.0 * sgn * d1
        if val < 0:
            raise NotInPassband(f"no real branch leaves k=0 at omega={omega}")
        return EdgeBehavior("origin-edge", m, float(np.sqrt(val)))
    if is_zws:
        d2 = float(complex(d2_delta_all(profile, lam, k * k, cfg, table=tab)["k2k2"]).real)
        dkk = 2.0 * d1 + 4.0 * k * k * d2
        mag = float(np.sqrt(max(sgn * dkk, 0.0)))
        left, right = (-mag, mag) if m == 0 else (mag, -mag)
        return EdgeBehavior("zws", m, slope_left=left, slope_right=right)
    dk = 2.0 * k * d1
    return EdgeBehavior("vertical", m, np.inf, sgn / dk)


# --------------------------------------------------------------------------
# convexity
# --------------------------------------------------------------------------


def _h_values(d, d1, d2, k):
    """``h = Delta Delta_k^2 + (1 - Delta^2) Delta_kk`` from ``k^2``-derivatives."""
    dk = 2.0 * k * d1
    dkk = 2.0 * d1 + 4.0 * k * k * d2
    return d * dk * dk + (1.0 - d * d) * dkk


def _first_edge(fun, lo, hi, cfg) -> float:
    """Least root of ``Delta(s) = 1`` in ``k`` within the bracket ``[lo, hi]``."""
    lo, hi = lo * (1 - 1e-9), hi * (1 + 1e-9)
    f = lambda k: float(fun([k * k], cfg)[0]) - 1.0
    flo, fhi = f(lo), f(hi)
    if flo > 0 or fhi < 0:
        raise ScanIncomplete("first edge k_{1,0} not bracketed by the average/extremum bounds")
    if fhi == 0:
        return hi
    return float(optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200))


def _grid_open(k10: float, n: int) -> np.ndarray:
    # Chebyshev-like clustering towards both ends, excluding them
    t = (np.arange(n) + 0.5) / n
    return 0.5 * k10 * (1.0 - np.cos(np.pi * t))


def convexity_certificate(
    profile: MaterialProfile,
    omega: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    n: int = 64,
) -> ConvexityCertificate:
    """Certify convexity of the closed first branch below ``omega_1(pi, 0)``.

    Evaluates ``h(k)`` on ``n`` points of ``(0, k_{1,0})`` from the exact first
    and second ``k^2``-derivatives of ``Delta``, checks positivity of those
    derivatives on the sampled ``k^2`` and the bracket
    ``omega sqrt(<rho>/<mu2>) <= k_{1,0} <= omega max sqrt(rho/mu2)``.

    Raises
    ------
    OmegaTooHigh
        If ``omega >= omega_1(pi, 0)``.
    """
    omega = float(omega)
    if omega <= 0:
        raise ValueError("omega must be positive")
    w1 = first_cutoff_pi(profile, cfg)
    if omega >= w1:
        raise OmegaTooHigh(f"omega={omega} is not below the first zone-edge cutoff {w1:.12g}")
    lo = omega * np.sqrt(average(profile, "rho") / average(profile, "mu2"))
    hi = omega * np.sqrt(extremum(profile, "rho/mu2")[1])
    fun = _at_omega(profile, omega)
    k10 = _first_edge(fun, lo, hi, cfg)
    bounds_ok = lo * (1 - 1e-12) <= k10 <= hi * (1 + 1e-12)
    ks = _grid_open(k10, n)
    lam = omega * omega
    D, D1, D2 = np.empty(n), np.empty(n), np.empty(n)
    for i, kk in enumerate(ks):
        tab = MatricantTable(profile, lam, kk * kk, cfg)
        D[i] = tab.delta.real
        D1[i] = complex(d_delta_integral(profile, lam, kk * kk, cfg, table=tab).d_dk2).real
        D2[i] = complex(d2_delta_all(profile, lam, kk * kk, cfg, table=tab)["k2k2"]).real
    h = _h_values(D, D1, D2, ks)
    min_h = float(np.min(h))
    derivatives_positive = bool(np.all(D1 > 0) and np.all(D2 > 0))
    return ConvexityCertificate(
        omega, ks, h, min_h, bool(min_h > 0), k10, (float(lo), k10, float(hi)), bool(bounds_ok),
        derivatives_positive, float(D1.min()), float(D2.min()), _K_of(D),
    )


# --------------------------------------------------------------------------
# truncated-series model
# --------------------------------------------------------------------------


def _pmat_mul(A, B):
    """Product of 2x2 matrices whose entries are coefficient arrays in ``s``."""
    return [[P.polyadd(P.polymul(A[i][0], B[0][j]), P.polymul(A[i][1], B[1][j])) for j in range(2)] for i in range(2)]


def _pmat_add(A, B):
    return [[P.polyadd(A[i][j], B[i][j]) for j in range(2)] for i in range(2)]


def _pmat_scale(A, c):
    return [[np.asarray(A[i][j], dtype=complex) * c for j in range(2)] for i in range(2)]


def _truncated_exp(rho, mu1, mu2, width, omega, terms):
    """``sum_{n < terms} (Q width)^n / n!`` with entries polynomial in ``s = k^2``."""
    # Q = i [[0, -1/mu1], [mu2 s - rho w^2, 0]]
    A = [
        [np.array([0j]), np.array([-1j * width / mu1])],
        [np.array([-1j * width * rho * omega * omega, 1j * width * mu2]), np.array([0j])],
    ]
    eye = [[np.array([1 + 0j]), np.array([0j])], [np.array([0j]), np.array([1 + 0j])]]
    total, term = eye, eye
    for n in range(1, terms):
        term = _pmat_scale(_pmat_mul(A, term), 1.0 / n)
        total = _pmat_add(total, term)
    return total


def truncated_delta_polynomial(profile: MaterialProfile, omega: float, terms: int) -> np.ndarray:
    """Coefficients (ascending in ``s = k^2``) of the truncated-series ``Delta``.

    Each constant layer exponential ``exp(Q_j d_j)`` is replaced by its Taylor
    polynomial with ``terms`` terms and the monodromy is the ordered product.

    Raises
    ------
    NotPiecewiseConstant
    """
    if not profile.is_piecewise_constant:
        raise NotPiecewiseConstant("truncated layer series needs a piecewise-constant profile")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    M = [[np.array([1 + 0j]), np.array([0j])], [np.array([0j]), np.array([1 + 0j])]]
    for seg in profile.segments:
        rho, mu1, mu2 = (float(getattr(seg, n)(seg.start)) for n in ("rho", "mu1", "mu2"))
        E = _truncated_exp(rho, mu1, mu2, seg.end - seg.start, float(omega), terms)
        M = _pmat_mul(E, M)
    tr = P.polyadd(M[0][0], M[1][1])
    return 0.5 * np.real(np.asarray(tr))


def truncated_series_isofreq(
    profile: MaterialProfile,
    omega: float,
    terms: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    n: int = 64,
) -> IsoBranch:
    """First branch ``K_1(k)`` of the truncated layer-series model.

    The returned branch carries a :class:`ConvexityCertificate` built from the
    exact derivatives of the truncated polynomial ``Delta(s)``; with few terms
    the truncation can produce a spurious concavity (``min_h < 0``).

    Raises
    ------
    NotPiecewiseConstant
    """
    omega = float(omega)
    coef = truncated_delta_polynomial(profile, omega, terms)
    c1 = P.polyder(coef)
    c2 = P.polyder(coef, 2)
    # least positive root of Delta(s) = 1
    shifted = P.polysub(coef, [1.0])
    roots = P.polyroots(shifted) if np.trim_zeros(shifted, "b").size > 1 else np.empty(0)
    real = np.sort(roots[(np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))) & (roots.real > 0)].real)
    if real.size == 0:
        raise ScanIncomplete("truncated model has no edge Delta = 1 at k > 0")
    s10 = float(real[0])
    s10 = float(optimize.brentq(lambda s: P.polyval(s, shifted), 0.5 * s10, min(1.5 * s10, s10 + 1.0), xtol=1e-15))
    k10 = float(np.sqrt(s10))
    d0 = float(P.polyval(0.0, coef))
    ks = _grid_open(k10, n)
    D = P.polyval(ks**2, coef)
    h = _h_values(D, P.polyval(ks**2, c1), P.polyval(ks**2, c2), ks)
    min_h = float(np.min(h))
    cert = ConvexityCertificate(omega, ks, h, min_h, bool(min_h > 0), k10, K=_K_of(D))
    kk = np.concatenate([[0.0], ks, [k10]])
    KK = np.concatenate([[_K_of(d0)], _K_of(D), [0.0]])
    closed = abs(d0) < 1.0
    return IsoBranch(1, omega, np.column_stack([kk, KK]), [(k10, 0)], closed, [], (0.0, k10), cert)
