"""Dispersion-surface cuts at fixed ``k`` and fixed ``K``.

Everything is organised around the *spectral skeleton* of ``Delta`` at fixed
``k``: the zeros ``z_1 < z_2 < ...`` of ``Delta(omega)`` and the single
extremum ``e_n`` of ``Delta`` between ``z_n`` and ``z_{n+1}``.  Because the
zeros of ``dDelta/d(omega^2)`` strictly interlace those of ``Delta``,
``Delta`` is monotone on each piece ``[e_{n-1}, e_n]`` (``e_0 = 0``) and that
piece carries exactly the ``n``-th Floquet branch: for every ``K`` in
``[0, pi]`` the branch frequency ``omega_n(K, k)`` is the unique root of
``Delta = cos K`` on the piece.  Stopbands sit around the extrema with
``|Delta(e_n)| > 1``; a tangency ``|Delta(e_n)| = 1`` is a zero-width stopband
candidate.

The frequency scan uses a grid that advances the WKB phase
``Phi(omega) = int Re sqrt((rho omega^2 - mu2 k^2)/mu1) dy`` by at most
``pi/8`` per step (and the frequency by at most ``(pi/8)/max sqrt(rho/mu1)``),
evaluated at a relaxed tolerance; roots are then polished at full accuracy.
Capture is certified by the interlacing property (every extremum between
consecutive zeros must reach ``|Delta| >= 1``); the grid is refined locally
when the check fails and :class:`ScanIncomplete` is raised if it keeps failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .errors import ScanIncomplete, ZwsDegenerate
from .lyapunov import (
    bloch_vector,
    d2_delta_all,
    d_delta_integral,
    delta_values,
)
from .matricant import DEFAULT_CONFIG, MatricantTable, QuadratureConfig, monodromy_batch
from .profile import MaterialProfile, average, extremum

__all__ = [
    "Branch",
    "FloquetRoot",
    "BandEdge",
    "Gap",
    "ZwsReport",
    "StopbandProfile",
    "BranchSlope",
    "BlochMode",
    "Skeleton",
    "TANGENCY_TOL",
    "ZWS_CONFIRM_TOL",
    "spectral_skeleton",
    "floquet_branches",
    "branch_omega",
    "band_edges",
    "stop_gaps",
    "dirichlet_neumann",
    "detect_zws",
    "zws_scan",
    "stopband_profile",
    "domega_dK",
    "domega_dk",
    "dv2_dk2",
    "bloch_eigenfunction",
    "high_k_limit",
    "trace_branch_k",
    "trace_branch_K",
]

TANGENCY_TOL = 1e-8
ZWS_CONFIRM_TOL = 1e-7
ROOT_TOL = 1e-12
_SCAN_PHASE_STEP = np.pi / 8


# --------------------------------------------------------------------------
# containers
# --------------------------------------------------------------------------


@dataclass
class Branch:
    """Ordered polyline of one dispersion-surface cut.

    ``points`` has shape ``(N, 2)`` holding ``(abscissa, omega)`` pairs; the
    abscissa is ``k`` for a fixed-``K`` cut and ``K`` for a fixed-``k`` cut.
    """

    index: int
    fixed: dict
    points: np.ndarray
    kind: str = "floquet"


@dataclass(frozen=True)
class FloquetRoot:
    n: int
    omega: float
    K: float
    k: float
    zws_candidate: bool = False


@dataclass(frozen=True)
class BandEdge:
    """Root of ``Delta = (-1)^m`` belonging to branch ``n``."""

    omega: float
    m: int
    n: int
    k: float
    zws_candidate: bool = False


@dataclass(frozen=True)
class Gap:
    """Closed stopband interval ``[lower, upper]`` following branch ``index``.

    ``index = 0`` is the low-frequency stopband ``[0, omega_1(0, k)]`` which
    exists for ``k > 0``.
    """

    index: int
    m: int
    lower: float
    upper: float
    omega_ext: float
    delta_ext: float
    zws_candidate: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass
class ZwsReport:
    omega: float
    k: float
    sign: int
    residual_M: float
    residual_m2: float
    newton_converged: bool
    iterations: int = 0
    tol: float = ZWS_CONFIRM_TOL
    origin: bool = False

    @property
    def confirmed(self) -> bool:
        return (not self.origin) and self.residual_M <= self.tol and self.residual_m2 <= self.tol


@dataclass
class StopbandProfile:
    band: int
    k: float
    m: int
    omega: np.ndarray
    im_K: np.ndarray
    omega_ext: float
    delta_ext: float
    curvature: float | None
    lower: float
    upper: float


@dataclass(frozen=True)
class BranchSlope:
    """``d omega_n / dK`` with the second derivative where the first vanishes."""

    first: float
    second: float | None
    case: str


@dataclass
class BlochMode:
    y: np.ndarray
    u: np.ndarray
    mu1_du: np.ndarray
    omega: float
    K: float
    k: float
    w: np.ndarray
    residual: float
    integrals: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# scalar helpers
# --------------------------------------------------------------------------


def _scan_cfg(cfg: QuadratureConfig) -> QuadratureConfig:
    return replace(cfg, rel_tol=max(cfg.rel_tol, 1e-9), abs_tol=max(cfg.abs_tol, 1e-10), strict=False)


def _delta(profile, omega, k, cfg) -> float:
    return float(delta_values(profile, [omega * omega], [k * k], cfg)[0].real)


def _delta_grid(profile, omegas, k, cfg, chunk: int = 16) -> np.ndarray:
    """``Delta`` at arbitrary frequencies, batched in sorted chunks of similar rate."""
    omegas = np.asarray(omegas, dtype=float)
    order = np.argsort(omegas)
    srt = omegas[order]
    out = np.empty(omegas.size)
    vals = np.empty(omegas.size)
    for s in range(0, srt.size, chunk):
        w = srt[s : s + chunk]
        vals[s : s + chunk] = delta_values(profile, w * w, k * k, cfg, chunk=chunk).real
    out[order] = vals
    return out


def _at_k(profile, k):
    """``Delta`` as a batched function of frequency at fixed ``k``."""
    return lambda omegas, cfg: _delta_grid(profile, omegas, k, cfg)


def _phase(profile: MaterialProfile, omegas, k: float, n: int = 512) -> np.ndarray:
    """WKB phase ``int Re sqrt((rho w^2 - mu2 k^2)/mu1) dy`` (midpoint rule)."""
    y = (np.arange(n) + 0.5) / n
    rho, mu1, mu2 = profile.coefficients(y)
    w2 = np.asarray(omegas, dtype=float)[:, None] ** 2
    return np.mean(np.sqrt(np.maximum(rho * w2 - mu2 * k * k, 0.0) / mu1), axis=1)


def _sign_changes(vals: np.ndarray) -> np.ndarray:
    """Indices ``i`` with a root in ``[x_i, x_{i+1}]``; an exact zero counts once (as positive)."""
    neg = np.signbit(vals)
    return np.nonzero(neg[1:] != neg[:-1])[0]


def _solve_brackets(fun, target, lo, hi, flo, fhi, cfg, ftol: float = 1e-10):
    """Roots of ``Delta - target`` in many brackets at once.

    Illinois regula falsi at the relaxed scan tolerance, all brackets advanced
    together (one batched evaluation per sweep), followed by batched secant
    polishing at full accuracy.  ``fun(x, cfg)`` evaluates ``Delta`` at an
    array of abscissae; ``flo``/``fhi`` are ``Delta - target`` at the bracket
    ends and must have opposite signs (or vanish).
    """
    target = np.broadcast_to(np.asarray(target, dtype=float), np.shape(lo)).copy()
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    fa, fb = np.array(flo, dtype=float), np.array(fhi, dtype=float)
    root = np.where(fa == 0.0, a, np.where(fb == 0.0, b, np.nan))
    active = np.isnan(root)
    scan = _scan_cfg(cfg)
    side = np.zeros(a.size, dtype=int)
    for _ in range(100):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        c = b[idx] - fb[idx] * (b[idx] - a[idx]) / (fb[idx] - fa[idx])
        c = np.clip(c, np.minimum(a[idx], b[idx]), np.maximum(a[idx], b[idx]))
        fc = fun(c, scan) - target[idx]
        for j, i in enumerate(idx):
            if fc[j] * fb[i] < 0:
                a[i], fa[i] = b[i], fb[i]
                side[i] = 0
            else:
                fa[i] *= 0.5 if side[i] == 1 else 1.0
                side[i] = 1
            b[i], fb[i] = c[j], fc[j]
            if abs(fc[j]) <= ftol or abs(b[i] - a[i]) <= 1e-12 * max(1.0, abs(c[j])):
                root[i] = c[j]
                active[i] = False
    root = np.where(np.isnan(root), b, root)
    # polish at full accuracy
    lo_arr, hi_arr = np.minimum(lo, hi), np.maximum(lo, hi)
    h = 1e-7 * np.maximum(1.0, np.abs(root))
    x0 = np.clip(root - h, lo_arr, hi_arr)
    x1 = np.clip(root + h, lo_arr, hi_arr)
    f0 = fun(x0, cfg) - target
    f1 = fun(x1, cfg) - target
    for _ in range(3):
        ok = (f1 != f0) & (x1 != x0)
        if not np.any(ok):
            break
        x2 = np.where(ok, x1 - f1 * (x1 - x0) / np.where(ok, f1 - f0, 1.0), x1)
        x2 = np.clip(x2, lo_arr, hi_arr)
        f2 = fun(x2, cfg) - target
        x0, f0, x1, f1 = x1, f1, x2, f2
        if np.all(np.abs(f1) <= ROOT_TOL):
            break
    best = np.where(np.abs(f1) <= np.abs(f0), x1, x0)
    return best


def _extrema_between(fun, a, b, grid, vals, cfg):
    """Extremum of ``Delta`` in each interval ``(a_j, b_j)`` between consecutive zeros.

    Starts from the largest scan value inside each interval and performs
    batched Newton steps on ``dDelta/domega`` with central differences at the
    relaxed tolerance, safeguarded to the interval.  Returns the locations and
    ``Delta`` evaluated there at full accuracy.
    """
    scan = _scan_cfg(cfg)
    n = a.size
    x = np.empty(n)
    for j in range(n):
        inside = (grid > a[j]) & (grid < b[j])
        if np.any(inside):
            gi, gv = grid[inside], vals[inside]
            x[j] = gi[np.argmax(np.abs(gv))]
        else:
            x[j] = 0.5 * (a[j] + b[j])
    width = b - a
    h = 1e-3 * width
    for _ in range(30):
        pts = np.concatenate([x - h, x, x + h])
        f = fun(pts, scan)
        fm, f0, fp = f[:n], f[n : 2 * n], f[2 * n :]
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * f0 + fm) / (h * h)
        good = d2 * np.sign(f0) < 0
        step = np.where(good, -d1 / np.where(good, d2, 1.0), np.sign(d1 * np.sign(f0)) * 0.1 * width)
        step = np.clip(step, -0.25 * width, 0.25 * width)
        x_new = np.clip(x + step, a + 1e-6 * width, b - 1e-6 * width)
        moved = np.abs(x_new - x)
        x = x_new
        h = np.minimum(h, np.maximum(10 * moved, 1e-5 * width))
        if np.all(moved <= 1e-9 * np.maximum(1.0, x)):
            break
    # two Newton polish steps at full accuracy
    h = 1e-4 * width
    for _ in range(2):
        f = fun(np.concatenate([x - h, x, x + h]), cfg)
        fm, f0, fp = f[:n], f[n : 2 * n], f[2 * n :]
        d2 = (fp - 2 * f0 + fm) / (h * h)
        good = d2 * np.sign(f0) < 0
        step = np.where(good, -(fp - fm) / (2 * h) / np.where(good, d2, 1.0), 0.0)
        x = np.clip(x + np.clip(step, -h, h), a, b)
        h = np.maximum(np.abs(step), 1e-6 * width)
    return x, fun(x, cfg)


# --------------------------------------------------------------------------
# skeleton
# --------------------------------------------------------------------------


@dataclass
class Skeleton:
    """Zeros and extrema of ``Delta(omega)`` at fixed ``k`` up to past ``omega_max``."""

    profile: MaterialProfile
    k: float
    omega_max: float
    cfg: QuadratureConfig
    zeros: np.ndarray
    extrema: np.ndarray
    delta_ext: np.ndarray
    delta0: float

    @property
    def n_pieces(self) -> int:
        return int(self.extrema.size)

    def piece(self, n: int) -> tuple[float, float, float, float]:
        """``(lo, hi, Delta(lo), Delta(hi))`` of the monotone piece carrying branch ``n``."""
        if not 1 <= n <= self.n_pieces:
            raise IndexError(f"branch {n} not covered (have {self.n_pieces})")
        lo = 0.0 if n == 1 else float(self.extrema[n - 2])
        dlo = self.delta0 if n == 1 else float(self.delta_ext[n - 2])
        return lo, float(self.extrema[n - 1]), dlo, float(self.delta_ext[n - 1])

    def tangent(self, n: int) -> bool:
        """Whether the extremum closing piece ``n`` touches ``|Delta| = 1``."""
        return bool(abs(abs(self.delta_ext[n - 1]) - 1.0) <= TANGENCY_TOL)

    def roots(self, target: float, ns=None) -> dict[int, tuple[float, bool]]:
        """Roots of ``Delta = target`` on pieces ``ns`` (default all): ``{n: (omega, at_tangency)}``."""
        ns = range(1, self.n_pieces + 1) if ns is None else ns
        out: dict[int, tuple[float, bool]] = {}
        pending = []
        for n in ns:
            lo, hi, dlo, dhi = self.piece(n)
            tan_hi = abs(target - dhi) <= TANGENCY_TOL and self.tangent(n)
            tan_lo = n > 1 and abs(target - dlo) <= TANGENCY_TOL and self.tangent(n - 1)
            if n == 1 and self.k == 0.0 and target >= 1.0 - TANGENCY_TOL:
                out[n] = (0.0, False)
                continue
            flo, fhi = dlo - target, dhi - target
            if flo * fhi < 0:
                pending.append((n, lo, hi, flo, fhi, tan_lo or tan_hi))
            elif fhi == 0.0 or tan_hi:
                out[n] = (float(hi), bool(tan_hi))
            elif flo == 0.0 or tan_lo:
                out[n] = (float(lo), bool(tan_lo))
            elif min(abs(flo), abs(fhi)) <= TANGENCY_TOL:
                # target equals an end value to within the tangency band
                out[n] = (float(lo), False) if abs(flo) < abs(fhi) else (float(hi), False)
        if pending:
            arr = np.array([p[1:5] for p in pending])
            r = _solve_brackets(self._fun, target, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], self.cfg)
            for (n, *_, tan), w in zip(pending, r):
                out[n] = (float(w), bool(tan))
        return out

    def _fun(self, omegas, cfg):
        return _delta_grid(self.profile, omegas, self.k, cfg)

    def root(self, n: int, target: float) -> tuple[float, bool] | None:
        """Root of ``Delta = target`` on piece ``n``; ``(omega, at_tangency)`` or ``None``."""
        return self.roots(target, [n]).get(n)


def _scan_grid(profile, k, w_start, w_end) -> np.ndarray:
    rmax = np.sqrt(extremum(profile, "rho/mu1")[1])
    h_max = _SCAN_PHASE_STEP / rmax
    fine = np.arange(w_start, w_end + h_max, h_max / 8.0)
    ph = _phase(profile, fine, k)
    level = np.floor(ph / _SCAN_PHASE_STEP)
    keep = np.zeros(fine.size, dtype=bool)
    keep[0] = True
    keep[1:] = level[1:] != level[:-1]
    keep[::8] = True
    keep[-1] = True
    return fine[keep]


def spectral_skeleton(
    profile: MaterialProfile,
    k: float,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    max_refine: int = 4,
) -> Skeleton:
    """Zeros/extrema of ``Delta(omega)`` at fixed ``k`` covering ``[0, omega_max]``.

    Raises
    ------
    ScanIncomplete
        If the interlacing certificate still fails after ``max_refine`` local
        grid refinements.
    """
    k = abs(float(k))
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    scan = _scan_cfg(cfg)
    w_start = k * np.sqrt(extremum(profile, "mu2/rho")[0])
    span = max(omega_max - w_start, 1.0)
    w_end = max(omega_max, w_start) + 0.25 * span
    grid = _scan_grid(profile, k, w_start, w_end)
    vals = _delta_grid(profile, grid, k, scan)
    for _ in range(40):
        idx = _sign_changes(vals)
        if np.count_nonzero(grid[idx] > omega_max) >= 2:
            break
        extra = _scan_grid(profile, k, grid[-1], grid[-1] + 0.5 * span)[1:]
        grid = np.concatenate([grid, extra])
        vals = np.concatenate([vals, _delta_grid(profile, extra, k, scan)])
    else:
        raise ScanIncomplete(f"no zeros of Delta found beyond omega_max={omega_max} at k={k}")

    for attempt in range(max_refine + 1):
        idx = _sign_changes(vals)
        zeros = _solve_brackets(_at_k(profile, k), 0.0, grid[idx], grid[idx + 1], vals[idx], vals[idx + 1], scan, ftol=1e-9)
        # keep zeros up to the second one past omega_max
        beyond = np.nonzero(zeros > omega_max)[0]
        zeros = zeros[: beyond[1] + 1]
        extrema, dext = _extrema_between(_at_k(profile, k), zeros[:-1], zeros[1:], grid, vals, cfg)
        bad = []
        for j in range(zeros.size - 1):
            a, b = zeros[j], zeros[j + 1]
            gv = vals[(grid > a) & (grid < b)]
            dv = np.diff(np.concatenate([[0.0], gv, [0.0]]))
            dv = dv[np.abs(dv) > 1e-7]
            turns = int(np.count_nonzero(np.sign(dv[1:]) != np.sign(dv[:-1])))
            if abs(dext[j]) < 1.0 - 1e-7 or turns > 1:
                bad.append((a, b))
        if not bad:
            break
        if attempt == max_refine:
            raise ScanIncomplete(
                f"interlacing certificate failed on {len(bad)} interval(s) at k={k}, e.g. {bad[0]}"
            )
        extra = []
        for a, b in bad:
            lo_i = max(0, np.searchsorted(grid, a) - 1)
            hi_i = min(grid.size - 1, np.searchsorted(grid, b))
            seg = grid[lo_i : hi_i + 1]
            for u, v in zip(seg[:-1], seg[1:]):
                extra.extend(np.linspace(u, v, 9)[1:-1])
        extra = np.unique(np.array(extra))
        grid_new = np.concatenate([grid, extra])
        vals_new = np.concatenate([vals, _delta_grid(profile, extra, k, scan)])
        order = np.argsort(grid_new)
        grid, vals = grid_new[order], vals_new[order]

    delta0 = _delta(profile, 0.0, k, cfg) if k > 0 else 1.0
    return Skeleton(profile, k, float(omega_max), cfg, zeros, extrema, dext, delta0)


# --------------------------------------------------------------------------
# branches, edges and gaps
# --------------------------------------------------------------------------


def floquet_branches(
    profile: MaterialProfile,
    K: float,
    k: float,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    skeleton: Skeleton | None = None,
) -> list[FloquetRoot]:
    """All branch frequencies ``omega_n(K, k)`` in ``[0, omega_max]``.

    ``K`` is reduced to ``[0, pi]`` using evenness and periodicity in ``K``.
    At ``K in {0, pi}`` a tangential (double) root is reported once per branch
    (both adjacent branches share it) with ``zws_candidate=True``.
    """
    Kr = float(np.abs(np.remainder(K + np.pi, 2 * np.pi) - np.pi))
    sk = skeleton or spectral_skeleton(profile, k, omega_max, cfg)
    c = float(np.cos(Kr))
    if Kr == 0.0:
        c = 1.0
    elif Kr == np.pi:
        c = -1.0
    ns = [n for n in range(1, sk.n_pieces + 1) if sk.piece(n)[0] <= omega_max]
    out = []
    for n, (w, tan) in sorted(sk.roots(c, ns).items()):
        if w <= omega_max:
            out.append(FloquetRoot(n, w, Kr, abs(k), tan))
    return out


def branch_omega(
    profile: MaterialProfile,
    K: float,
    k: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> FloquetRoot:
    """Single branch value ``omega_n(K, k)``, growing the scan range as needed."""
    w_lo = abs(k) * np.sqrt(extremum(profile, "mu2/rho")[0])
    y = (np.arange(256) + 0.5) / 256
    rho, mu1, _ = profile.coefficients(y)
    span = (n + 1.0) * np.pi / np.mean(np.sqrt(rho / mu1))
    for _ in range(12):
        roots = floquet_branches(profile, K, k, w_lo + span, cfg)
        for r in roots:
            if r.n == n:
                return r
        span *= 1.6
    raise ScanIncomplete(f"branch {n} not found at K={K}, k={k}")


def band_edges(
    profile: MaterialProfile,
    k: float,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    skeleton: Skeleton | None = None,
) -> list[BandEdge]:
    """Cutoffs ``omega_{n,m}`` (roots of ``Delta = (-1)^m``) in ``[0, omega_max]``, sorted."""
    sk = skeleton or spectral_skeleton(profile, k, omega_max, cfg)
    edges = []
    for m, c in ((0, 1.0), (1, -1.0)):
        for r in floquet_branches(profile, m * np.pi, k, omega_max, cfg, skeleton=sk):
            edges.append(BandEdge(r.omega, m, r.n, abs(k), r.zws_candidate))
    edges.sort(key=lambda e: (e.omega, e.n))
    return edges


def stop_gaps(
    profile: MaterialProfile,
    k: float,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    skeleton: Skeleton | None = None,
) -> list[Gap]:
    """Closed stopband intervals whose lower edge lies in ``[0, omega_max]``."""
    sk = skeleton or spectral_skeleton(profile, k, omega_max, cfg)
    gaps = []
    first = sk.root(1, 1.0)
    w1 = first[0] if first else 0.0
    if k != 0.0:
        gaps.append(Gap(0, 0, 0.0, w1, 0.0, sk.delta0, False))
    else:
        gaps.append(Gap(0, 0, 0.0, 0.0, 0.0, 1.0, False))
    ns = [n for n in range(1, sk.n_pieces) if sk.extrema[n - 1] <= 2 * omega_max + 1.0]
    plus = sk.roots(1.0, [n for n in ns if sk.delta_ext[n - 1] > 0] + [n + 1 for n in ns if sk.delta_ext[n - 1] > 0])
    minus = sk.roots(-1.0, [n for n in ns if sk.delta_ext[n - 1] < 0] + [n + 1 for n in ns if sk.delta_ext[n - 1] < 0])
    for n in ns:
        de = float(sk.delta_ext[n - 1])
        m = 0 if de > 0 else 1
        found = plus if m == 0 else minus
        lo, hi = found.get(n), found.get(n + 1)
        if lo is None or hi is None:
            continue
        if lo[0] > omega_max:
            break
        gaps.append(Gap(n, m, lo[0], hi[0], float(sk.extrema[n - 1]), de, sk.tangent(n)))
    return gaps


def dirichlet_neumann(
    profile: MaterialProfile,
    y0: float,
    k: float,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    skeleton: Skeleton | None = None,
) -> tuple[list[float], list[float]]:
    """Dirichlet and Neumann frequencies for the period ``[y0, y0+1]``.

    They are the zeros in ``omega`` of ``M2(y0+1, y0)`` and ``M3(y0+1, y0)``;
    exactly one of each lies in every closed stopband (no Dirichlet value in
    the lowest one), which is how they are bracketed.
    """
    sk = skeleton or spectral_skeleton(profile, k, omega_max, cfg)
    gaps = stop_gaps(profile, k, omega_max, cfg, skeleton=sk)

    def entry(w, which):
        M, _ = monodromy_batch(profile, [w * w], [k * k], cfg, y0=y0)
        return float((-1j * M[0][which]).real)

    def zero_in(gap, which):
        a, b = gap.lower, gap.upper
        if b - a <= 1e-14 * max(1.0, b):
            return a
        fa, fb = entry(a, which), entry(b, which)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb > 0:
            # the zero sits on a band edge to within rounding
            return a if abs(fa) < abs(fb) else b
        return optimize.brentq(lambda w: entry(w, which), a, b, xtol=1e-13 * max(1.0, b), rtol=4 * np.finfo(float).eps)

    dirichlet, neumann = [], []
    for g in gaps:
        if g.index > 0:
            wd = zero_in(g, (0, 1))
            if wd <= omega_max:
                dirichlet.append(float(wd))
        wn = zero_in(g, (1, 0))
        if wn <= omega_max:
            neumann.append(float(wn))
    return dirichlet, neumann


# --------------------------------------------------------------------------
# zero-width stopbands
# --------------------------------------------------------------------------


def _zws_residuals(profile, omega, k, sign, cfg, grid: int):
    tab = MatricantTable(profile, omega * omega, k * k, cfg)
    res_M = float(np.max(np.abs(tab.M - sign * np.eye(2))))
    y = np.linspace(0.0, 1.0, grid, endpoint=False)
    _, m2, _, _ = tab.m_values(y)
    return tab, res_M, float(np.max(np.abs(m2)))


def detect_zws(
    profile: MaterialProfile,
    omega: float,
    k: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    sign: int | None = None,
    refine: bool = True,
    tol: float = ZWS_CONFIRM_TOL,
    grid: int = 256,
    max_iter: int = 30,
) -> ZwsReport:
    """Refine and test a zero-width-stopband candidate.

    With ``refine=True`` a Gauss-Newton iteration in ``(omega^2, k^2)`` drives
    ``(Delta - sign, dDelta/d(omega^2), dDelta/d(k^2))`` to zero; all three
    vanish at a ZWS, and the over-determined form keeps the iteration
    well-posed where the Jacobian of any two of them is singular.  The point
    is confirmed iff ``max|M(1,0) - sign I| <= tol`` and
    ``max_y |m2(y)| <= tol``.  The origin ``omega = k = 0`` is never a ZWS.
    """
    omega, k = float(omega), float(abs(k))
    if omega == 0.0 and k == 0.0:
        _, rM, rm2 = _zws_residuals(profile, 0.0, 0.0, 1, cfg, grid)
        return ZwsReport(0.0, 0.0, 1, rM, rm2, False, 0, tol, origin=True)
    lam, kap = omega * omega, k * k
    if sign is None:
        sign = 1 if _delta(profile, omega, k, cfg) > 0 else -1
    converged = not refine
    it = 0
    if refine:
        for it in range(1, max_iter + 1):
            tab = MatricantTable(profile, lam, kap, cfg)
            d1 = d_delta_integral(profile, lam, kap, cfg, table=tab)
            d2 = d2_delta_all(profile, lam, kap, cfg, table=tab)
            F = np.array([tab.delta.real - sign, d1.d_dw2.real, d1.d_dk2.real])
            J = np.array(
                [
                    [d1.d_dw2.real, d1.d_dk2.real],
                    [d2["w2w2"].real, d2["w2k2"].real],
                    [d2["w2k2"].real, d2["k2k2"].real],
                ]
            )
            step, *_ = np.linalg.lstsq(J, -F, rcond=1e-12)
            new_lam = lam + step[0]
            new_kap = max(kap + step[1], 0.0)
            if new_lam <= 0:
                new_lam = 0.5 * lam
            moved = abs(new_lam - lam) + abs(new_kap - kap)
            lam, kap = new_lam, new_kap
            if moved <= 1e-13 * max(1.0, lam + kap) or np.max(np.abs(F)) <= 1e-13:
                converged = True
                break
    w, kk = float(np.sqrt(lam)), float(np.sqrt(kap))
    _, rM, rm2 = _zws_residuals(profile, w, kk, sign, cfg, grid)
    return ZwsReport(w, kk, int(sign), rM, rm2, converged, it, tol)


def zws_scan(
    profile: MaterialProfile,
    k_values,
    omega_max: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    seed_tol: float = 0.05,
) -> list[ZwsReport]:
    """Locate zero-width stopbands with ``omega <= omega_max`` over a ``k`` grid.

    For every gap index ``n`` the excess ``|Delta(e_n)| - 1`` is tracked along
    the ``k`` grid; each local minimum below ``seed_tol`` (or exact tangency)
    seeds :func:`detect_zws`.  Confirmed reports are de-duplicated.
    """
    ks = np.asarray(sorted(set(float(abs(x)) for x in k_values)))
    table: dict[int, list[tuple[float, float, float]]] = {}
    for kv in ks:
        try:
            sk = spectral_skeleton(profile, kv, omega_max, cfg)
        except ScanIncomplete:
            continue
        for n in range(1, sk.n_pieces + 1):
            if sk.extrema[n - 1] <= omega_max:
                table.setdefault(n, []).append((kv, float(sk.extrema[n - 1]), abs(float(sk.delta_ext[n - 1])) - 1.0))
    seeds = []
    for n, rows in table.items():
        ex = np.array([r[2] for r in rows])
        for i, (kv, we, e) in enumerate(rows):
            left = ex[i - 1] if i > 0 else np.inf
            right = ex[i + 1] if i + 1 < len(rows) else np.inf
            if e <= TANGENCY_TOL or (e <= seed_tol and e <= left and e <= right):
                seeds.append((we, kv))
    reports: list[ZwsReport] = []
    for we, kv in seeds:
        rep = detect_zws(profile, we, kv, cfg)
        if not rep.confirmed or rep.omega > omega_max * (1 + 1e-9):
            continue
        if any(abs(r.omega - rep.omega) < 1e-6 * max(1.0, rep.omega) and abs(r.k - rep.k) < 1e-6 * max(1.0, rep.k) for r in reports):
            continue
        reports.append(rep)
    reports.sort(key=lambda r: (r.k, r.omega))
    return reports


# --------------------------------------------------------------------------
# stopband attenuation
# --------------------------------------------------------------------------


def _delta_ww(profile, omega, k, cfg, table=None):
    """``(dDelta/domega, d2Delta/domega^2)`` via the chain rule in ``omega^2``."""
    tab = table or MatricantTable(profile, omega * omega, k * k, cfg)
    d1 = d_delta_integral(profile, omega * omega, k * k, cfg, table=tab)
    d2 = d2_delta_all(profile, omega * omega, k * k, cfg, table=tab)
    lam_d = d1.d_dw2.real
    return 2 * omega * lam_d, 2 * lam_d + 4 * omega * omega * d2["w2w2"].real, lam_d


def stopband_profile(
    profile: MaterialProfile,
    k: float,
    band: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    samples: int = 65,
) -> StopbandProfile:
    """Attenuation ``Im K = arccosh|Delta|`` across stopband ``band``.

    ``band = 0`` is the low-frequency stopband ``[0, omega_1(0,k)]`` (``k > 0``)
    whose extremum sits at ``omega = 0`` with curvature
    ``2 dDelta/d(omega^2) / sqrt(Delta^2 - 1)``.  For ``band = n >= 1`` the
    extremum ``omega_ext`` is the root of ``dDelta/d(omega^2)`` inside the gap
    and the curvature is ``(-1)^m Delta_omega_omega / sqrt(Delta_ext^2 - 1)``.
    Closed (zero-width) gaps give empty samples and ``curvature=None``.
    """
    k = abs(float(k))
    if band == 0:
        if k == 0.0:
            return StopbandProfile(0, k, 0, np.empty(0), np.empty(0), 0.0, 1.0, None, 0.0, 0.0)
        r = branch_omega(profile, 0.0, k, 1, cfg)
        lower, upper = 0.0, r.omega
        tab = MatricantTable(profile, 0.0, k * k, cfg)
        d0 = tab.delta.real
        lam_d = d_delta_integral(profile, 0.0, k * k, cfg, table=tab).d_dw2.real
        curv = 2.0 * lam_d / np.sqrt(d0 * d0 - 1.0)
        ws = lower + (upper - lower) * 0.5 * (1 - np.cos(np.linspace(0, np.pi, samples)))
        d = _delta_grid(profile, ws, k, cfg)
        return StopbandProfile(0, k, 0, ws, np.arccosh(np.maximum(np.abs(d), 1.0)), 0.0, d0, float(curv), lower, upper)
    gap = None
    w_max = branch_omega(profile, np.pi / 2, k, band + 1, cfg).omega
    for g in stop_gaps(profile, k, w_max, cfg):
        if g.index == band:
            gap = g
    if gap is None:
        raise ScanIncomplete(f"stopband {band} not found at k={k}")
    if gap.zws_candidate or gap.width <= 0.0:
        return StopbandProfile(band, k, gap.m, np.empty(0), np.empty(0), gap.omega_ext, gap.delta_ext, None, gap.lower, gap.upper)
    # Newton on dDelta/d(omega^2) from the skeleton extremum
    w = gap.omega_ext
    for _ in range(8):
        dw, dww, _ = _delta_ww(profile, w, k, cfg)
        step = dw / dww
        w_new = float(np.clip(w - step, gap.lower, gap.upper))
        if abs(w_new - w) <= 1e-14 * max(1.0, w):
            w = w_new
            break
        w = w_new
    tab = MatricantTable(profile, w * w, k * k, cfg)
    de = tab.delta.real
    _, dww, _ = _delta_ww(profile, w, k, cfg, table=tab)
    curv = (-1) ** gap.m * dww / np.sqrt(de * de - 1.0)
    ws = gap.lower + gap.width * 0.5 * (1 - np.cos(np.linspace(0, np.pi, samples)))
    d = _delta_grid(profile, ws, k, cfg)
    return StopbandProfile(band, k, gap.m, ws, np.arccosh(np.maximum(np.abs(d), 1.0)), w, de, float(curv), gap.lower, gap.upper)


# --------------------------------------------------------------------------
# derivatives along branches
# --------------------------------------------------------------------------


def _reduce_K(K: float) -> float:
    return float(np.abs(np.remainder(K + np.pi, 2 * np.pi) - np.pi))


def domega_dK(
    profile: MaterialProfile,
    K: float,
    k: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    cutoff_tol: float = 1e-12,
) -> BranchSlope:
    """Slope of branch ``n`` in ``K`` on ``[0, pi]``.

    * passband: ``-sin K / (dDelta/domega)``;
    * regular cutoff ``K = pi m``: slope 0 and second derivative
      ``(-1)^{m+1} / (dDelta/domega)``;
    * zero-width stopband: the two branches cross with slopes of magnitude
      ``1 / sqrt((-1)^{m+1} Delta_omega_omega)``; branch ``n`` increases with
      ``K`` for odd ``n`` and decreases for even ``n``, which fixes the sign;
    * origin (``n = 1``, ``K = k = 0``): ``1 / sqrt(<rho> <1/mu1>)``.
    """
    Kr = _reduce_K(K)
    k = abs(float(k))
    if n == 1 and Kr <= cutoff_tol and k == 0.0:
        return BranchSlope(1.0 / np.sqrt(average(profile, "rho") * average(profile, "inv_mu1")), None, "origin")
    root = branch_omega(profile, Kr, k, n, cfg)
    w = root.omega
    at_cutoff = Kr <= cutoff_tol or abs(Kr - np.pi) <= cutoff_tol
    if at_cutoff:
        m = 0 if Kr <= cutoff_tol else 1
        sign = 1 if m == 0 else -1
        if root.zws_candidate:
            rep = detect_zws(profile, w, k, cfg, sign=sign, refine=False)
            if rep.confirmed:
                _, dww, _ = _delta_ww(profile, w, k, cfg)
                mag = 1.0 / np.sqrt((-1) ** (m + 1) * dww)
                return BranchSlope(float((-1) ** (n + 1) * mag), None, "zws")
        dw, _, _ = _delta_ww(profile, w, k, cfg)
        return BranchSlope(0.0, float((-1) ** (m + 1) / dw), "cutoff")
    dw, _, _ = _delta_ww(profile, w, k, cfg)
    return BranchSlope(float(-np.sin(Kr) / dw), None, "passband")


def _branch_point(profile, K, k, n, cfg, omega):
    if omega is None:
        return branch_omega(profile, K, k, n, cfg).omega
    return float(omega)


def domega_dk(
    profile: MaterialProfile,
    K: float,
    k: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    method: str = "integral",
    omega: float | None = None,
) -> float:
    """Slope of branch ``n`` in ``k`` at fixed ``K``.

    ``d omega/dk = (k/omega) * int mu2 m2 / int rho m2`` (``method="integral"``)
    or ``(k/omega) * int mu2 |u|^2 / int rho |u|^2`` (``method="eigen"``, real
    ``K`` only).  Special values: ``sqrt(<mu2>/<rho>)`` at the origin and 0 at
    ``k = 0`` with ``omega != 0``.

    Raises
    ------
    ZwsDegenerate
        On the integral route at a zero-width stopband, where both integrals
        vanish identically.
    """
    k = abs(float(k))
    Kr = _reduce_K(K)
    if k == 0.0:
        if n == 1 and Kr == 0.0:
            return float(np.sqrt(average(profile, "mu2") / average(profile, "rho")))
        return 0.0
    w = _branch_point(profile, Kr, k, n, cfg, omega)
    tab = MatricantTable(profile, w * w, k * k, cfg)
    if method == "integral":
        y, wq = tab.quadrature()
        _, m2, _, _ = tab.m_values(y)
        rho, _, mu2 = profile.coefficients(y)
        num = np.sum(wq * mu2 * m2).real
        den = np.sum(wq * rho * m2).real
        if abs(den) <= 1e-12 * np.sum(wq * rho * np.abs(m2) + 1e-300):
            raise ZwsDegenerate("m2 vanishes identically (zero-width stopband)")
        return float(k / w * num / den)
    if method == "eigen":
        mode = bloch_eigenfunction(profile, Kr, k, n, np.linspace(0, 1, 3), cfg, omega=w, table=tab)
        return float(k / w * mode.integrals["mu2_u2"] / mode.integrals["rho_u2"])
    raise ValueError("method must be 'integral' or 'eigen'")


def dv2_dk2(
    profile: MaterialProfile,
    K: float,
    k: float,
    n: int,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    omega: float | None = None,
) -> float:
    """Derivative of ``v^2 = omega^2/k^2`` along branch ``n`` in ``k^2``.

    ``-(1/k^4) int mu1 |u'|^2 / int rho |u|^2`` -- strictly negative.
    """
    k = abs(float(k))
    w = _branch_point(profile, K, k, n, cfg, omega)
    mode = bloch_eigenfunction(profile, K, k, n, np.linspace(0, 1, 3), cfg, omega=w)
    return float(-mode.integrals["mu1_du2"] / (k**4 * mode.integrals["rho_u2"]))


def bloch_eigenfunction(
    profile: MaterialProfile,
    K: float,
    k: float,
    n: int,
    grid,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    omega: float | None = None,
    table: MatricantTable | None = None,
) -> BlochMode:
    """Bloch solution ``eta(y) = M(y,0) w`` with ``M(1,0) w = e^{iK} w``.

    ``grid`` points must lie in ``[0, 2]``.  The mode is normalised by
    ``|w| = 1``; the period integrals ``int rho|u|^2``, ``int mu2|u|^2`` and
    ``int mu1|u'|^2`` are returned in ``integrals``.
    """
    Kr = _reduce_K(K)
    w0 = _branch_point(profile, Kr, k, n, cfg, omega)
    tab = table or MatricantTable(profile, w0 * w0, k * k, cfg)
    M = tab.M
    d = tab.delta.real
    if abs(d - np.cos(Kr)) > 1e-7:
        raise ValueError(f"omega={w0} is not on the K={Kr} cut (Delta={d}, cos K={np.cos(Kr)})")
    q = np.exp(1j * Kr)
    if np.max(np.abs(M - np.real(q) * np.eye(2))) <= ZWS_CONFIRM_TOL:
        w = np.array([1.0, 0.0], dtype=complex)
    else:
        w = bloch_vector(M, q)
    y = np.asarray(grid, dtype=float)
    eta = tab.at(y) @ w
    residual = float(np.linalg.norm(M @ w - q * w))
    yq, wq = tab.quadrature()
    eq = tab.at(yq) @ w
    rho, mu1, mu2 = profile.coefficients(yq)
    ints = {
        "rho_u2": float(np.sum(wq * rho * np.abs(eq[:, 0]) ** 2)),
        "mu2_u2": float(np.sum(wq * mu2 * np.abs(eq[:, 0]) ** 2)),
        "mu1_du2": float(np.sum(wq * np.abs(eq[:, 1]) ** 2 / mu1)),
    }
    return BlochMode(y, eta[:, 0], eta[:, 1] / 1j, w0, Kr, abs(k), w, residual, ints)


def high_k_limit(
    profile: MaterialProfile,
    K: float,
    n: int,
    k_list,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """``omega_n(K, k)^2 / k^2`` for each ``k`` in ``k_list``."""
    return np.array([branch_omega(profile, K, kv, n, cfg).omega ** 2 / kv**2 for kv in k_list])


def trace_branch_k(
    profile: MaterialProfile,
    K: float,
    n: int,
    k_values,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> Branch:
    """Branch ``omega_n(K, k)`` sampled over ``k`` (a cutoff curve for ``K in {0, pi}``)."""
    Kr = _reduce_K(K)
    pts = [(float(kv), branch_omega(profile, Kr, kv, n, cfg).omega) for kv in k_values]
    kind = "cutoff" if Kr in (0.0, np.pi) else "floquet"
    return Branch(n, {"K": Kr}, np.array(pts), kind)


def trace_branch_K(
    profile: MaterialProfile,
    k: float,
    n: int,
    K_values,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> Branch:
    """Branch ``omega_n(K, k)`` sampled over ``K`` at fixed ``k``."""
    Ks = [_reduce_K(K) for K in K_values]
    w_hi = branch_omega(profile, np.pi if n % 2 else 0.0, k, n, cfg).omega
    sk = spectral_skeleton(profile, k, w_hi * 1.0001 + 1e-9, cfg)
    pts = []
    for K in Ks:
        roots = [r for r in floquet_branches(profile, K, k, np.inf, cfg, skeleton=sk) if r.n == n]
        if not roots:
            raise ScanIncomplete(f"branch {n} missing at K={K}")
        pts.append((K, roots[0].omega))
    return Branch(n, {"k": abs(float(k))}, np.array(pts), "floquet")
