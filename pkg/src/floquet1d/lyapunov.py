"""Lyapunov function ``Delta = tr M(1,0) / 2``, Floquet parameter and derivatives.

First derivatives are available by two exact routes:

* the *integral* route, ``dDelta/d(w^2) = 1/2 int rho m2``,
  ``dDelta/d(k^2) = -1/2 int mu2 m2``, valid for any complex arguments;
* the *eigenvector* route, built from the Bloch eigenvector ``w`` of the
  monodromy matrix and the eigenfunction ``u = [M(y,0) w]_1``; inside a
  passband ``dDelta/d(w^2) = sin K / (w^+ T w) int rho |u|^2``, and at a band
  edge the proper/generalised eigenvector pair replaces ``w``.

Second derivatives come from the ordered double integral of the product
``M2(s2+1, s1) M2(s1, s2)`` over ``0 < s2 < s1 < 1``.  Finite differences are
provided as an independent oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NotInPassband
from .matricant import (
    DEFAULT_CONFIG,
    EPS_SYM,
    MatricantTable,
    QuadratureConfig,
    T_SWAP,
    _pieces_between,
    _local_rate,
    monodromy_batch,
)
from .profile import MaterialProfile, average

__all__ = [
    "Classification",
    "LyapunovSample",
    "DerivativeBundle",
    "EPS_CUT",
    "ZWS_TOL",
    "classify",
    "delta",
    "delta_values",
    "floquet_K",
    "delta_small",
    "d_delta_integral",
    "d_delta_eigen",
    "d_delta_fd",
    "d2_delta",
    "d2_delta_all",
    "d2_delta_fd",
    "d2_delta_square_form",
    "bloch_vector",
]

EPS_CUT = 1e-9
#: ``max|M -+ I|`` below which the monodromy is treated as +-I
ZWS_TOL = 1e-7


class Classification(str, enum.Enum):
    PASSBAND = "passband"
    CUTOFF_PLUS = "cutoff+"
    CUTOFF_MINUS = "cutoff-"
    STOPBAND = "stopband"


@dataclass(frozen=True)
class LyapunovSample:
    """Value of ``Delta`` at one parameter point together with its classification."""

    omega2: complex
    k2: complex
    delta: complex
    classification: Classification
    K: complex
    origin: bool = False


@dataclass
class DerivativeBundle:
    """First (and optionally second) partial derivatives of ``Delta`` in ``w^2`` and ``k^2``."""

    d_dw2: complex
    d_dk2: complex
    method: str
    d2_dw2w2: complex | None = None
    d2_dk2k2: complex | None = None
    d2_dw2k2: complex | None = None
    zws: bool = False
    extra: dict = field(default_factory=dict)


def classify(d: float, eps_cut: float = EPS_CUT) -> Classification:
    """Passband / cutoff / stopband label for a real ``Delta``."""
    if abs(d - 1.0) <= eps_cut:
        return Classification.CUTOFF_PLUS
    if abs(d + 1.0) <= eps_cut:
        return Classification.CUTOFF_MINUS
    return Classification.PASSBAND if abs(d) < 1.0 else Classification.STOPBAND


def floquet_K(d) -> complex:
    """Floquet parameter with ``cos K = Delta`` in the strip ``Re K in [0, pi]``, ``Im K >= 0``.

    Real ``Delta`` maps to ``arccos`` on ``[-1, 1]``, to ``i arccosh(Delta)``
    above 1 and to ``pi + i arccosh(-Delta)`` below -1.  Complex ``Delta`` is
    mapped with the principal ``arccos`` and reflected into the strip.
    """
    d = complex(d)
    if d.imag == 0.0:
        x = d.real
        if -1.0 <= x <= 1.0:
            return complex(np.arccos(x))
        if x > 1.0:
            return 1j * np.arccosh(x)
        return np.pi + 1j * np.arccosh(-x)
    K = complex(np.arccos(d))
    if K.imag < 0:
        K = -K
    return K


def delta_values(profile: MaterialProfile, omega2, k2, cfg: QuadratureConfig = DEFAULT_CONFIG, chunk: int = 256):
    """Vectorised ``Delta`` for broadcastable arrays of ``w^2`` and ``k^2`` (complex result)."""
    w2, kk = np.broadcast_arrays(np.asarray(omega2, dtype=complex), np.asarray(k2, dtype=complex))
    flat_w, flat_k = w2.ravel(), kk.ravel()
    out = np.empty(flat_w.shape, dtype=complex)
    for s in range(0, flat_w.size, chunk):
        M, _ = monodromy_batch(profile, flat_w[s : s + chunk], flat_k[s : s + chunk], cfg)
        out[s : s + chunk] = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    return out.reshape(w2.shape)


def delta(profile: MaterialProfile, omega2: complex, k2: complex, cfg: QuadratureConfig = DEFAULT_CONFIG) -> LyapunovSample:
    """Evaluate and classify ``Delta`` at a single point."""
    d = complex(delta_values(profile, [omega2], [k2], cfg)[0])
    real = np.imag(omega2) == 0 and np.imag(k2) == 0
    if real:
        d = complex(d.real, 0.0) if abs(d.imag) <= EPS_SYM * max(1.0, abs(d)) else d
    cls = classify(d.real) if real else Classification.STOPBAND
    origin = omega2 == 0 and k2 == 0
    return LyapunovSample(complex(omega2), complex(k2), d, cls, floquet_K(d), origin)


def delta_small(profile: MaterialProfile, omega2: float, k2: float) -> float:
    """Quadratic small-parameter expansion ``1 + <1/mu1>(<mu2> k^2 - <rho> w^2)/2``."""
    return 1.0 + 0.5 * average(profile, "inv_mu1") * (average(profile, "mu2") * k2 - average(profile, "rho") * omega2)


# --------------------------------------------------------------------------
# first derivatives
# --------------------------------------------------------------------------


def _as_real(z):
    return z.real if np.isrealobj(z) or abs(np.imag(z)) <= 1e-9 * max(1.0, abs(z)) else z


def d_delta_integral(
    profile: MaterialProfile,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    table: MatricantTable | None = None,
) -> DerivativeBundle:
    """First derivatives from the period integrals of ``rho m2`` and ``mu2 m2``."""
    tab = table or MatricantTable(profile, omega2, k2, cfg)
    y, w = tab.quadrature()
    _, m2, _, _ = tab.m_values(y)
    rho, _, mu2 = profile.coefficients(y)
    dw = 0.5 * np.sum(w * rho * m2)
    dk = -0.5 * np.sum(w * mu2 * m2)
    return DerivativeBundle(complex(dw), complex(dk), "integral", extra={"delta": tab.delta})


def bloch_vector(M: np.ndarray, q: complex) -> np.ndarray:
    """Eigenvector of ``M`` for eigenvalue ``q`` using the better-conditioned row."""
    w_a = np.array([M[0, 1], q - M[0, 0]])
    w_b = np.array([q - M[1, 1], M[1, 0]])
    w = w_a if np.linalg.norm(w_a) >= np.linalg.norm(w_b) else w_b
    return w / np.linalg.norm(w)


def d_delta_eigen(
    profile: MaterialProfile,
    omega2: float,
    k2: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    table: MatricantTable | None = None,
    eps_cut: float = EPS_CUT,
    zws_tol: float = ZWS_TOL,
) -> DerivativeBundle:
    """First derivatives from the Bloch eigenfunction (passband or band edge).

    At a band edge (``|Delta| = 1`` within ``eps_cut``) the proper eigenvector
    ``w_d`` and a generalised eigenvector ``w_g`` with ``(M - q) w_g = w_d`` are
    used, with the factor ``1 / (2i w_d^+ T w_g)``.  When ``M = +-I`` the
    derivatives vanish and zeros are returned with ``zws=True``.

    Raises
    ------
    NotInPassband
        If ``|Delta| > 1 + eps_cut``.
    """
    tab = table or MatricantTable(profile, omega2, k2, cfg)
    M = tab.M
    d = float(tab.delta.real)
    if abs(d) > 1.0 + eps_cut:
        raise NotInPassband(f"|Delta| = {abs(d):.12g} > 1")
    sgn = 1.0 if d > 0 else -1.0
    if np.max(np.abs(M - sgn * np.eye(2))) <= zws_tol:
        return DerivativeBundle(0.0, 0.0, "eigen", zws=True, extra={"delta": d})
    if abs(abs(d) - 1.0) <= eps_cut:
        q = sgn
        if abs(M[0, 1]) >= abs(M[1, 0]):
            wd = np.array([M[0, 1], q - M[0, 0]])
            wg = np.array([0.0, 1.0], dtype=complex)
        else:
            wd = np.array([q - M[1, 1], M[1, 0]])
            wg = np.array([1.0, 0.0], dtype=complex)
        scale = np.linalg.norm(wd)
        wd, wg = wd / scale, wg / scale
        factor = 1.0 / (2j * (wd.conj() @ T_SWAP @ wg))
        w = wd
        kind = "cutoff"
    else:
        K = np.arccos(d)
        q = np.exp(1j * K)
        w = bloch_vector(M, q)
        factor = np.sin(K) / (w.conj() @ T_SWAP @ w)
        kind = "passband"
    y, wq = tab.quadrature()
    u = (tab.at(y) @ w)[..., 0]
    rho, _, mu2 = profile.coefficients(y)
    i_rho = np.sum(wq * rho * np.abs(u) ** 2)
    i_mu = np.sum(wq * mu2 * np.abs(u) ** 2)
    return DerivativeBundle(
        _as_real(complex(factor * i_rho)),
        _as_real(complex(-factor * i_mu)),
        "eigen",
        extra={"delta": d, "kind": kind},
    )


def d_delta_fd(profile: MaterialProfile, omega2: float, k2: float, cfg: QuadratureConfig = DEFAULT_CONFIG, step: float = 1e-5) -> DerivativeBundle:
    """Central finite differences of ``Delta`` (relative step in each variable)."""
    hw = step * max(1.0, abs(omega2))
    hk = step * max(1.0, abs(k2))
    vals = delta_values(profile, [omega2 + hw, omega2 - hw, omega2, omega2], [k2, k2, k2 + hk, k2 - hk], cfg)
    return DerivativeBundle(
        _as_real(complex((vals[0] - vals[1]) / (2 * hw))),
        _as_real(complex((vals[2] - vals[3]) / (2 * hk))),
        "finite-difference",
    )


# --------------------------------------------------------------------------
# second derivatives
# --------------------------------------------------------------------------


def _piece_rules(profile: MaterialProfile, omega2, k2, order: int, refine: int = 1):
    """Gauss-Legendre rules per smooth piece: list of ``(a, b, y, w)``."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    out = []
    for lo, hi, const in _pieces_between(profile, 0.0, 1.0):
        rate = _local_rate(profile, lo, hi, omega2, k2)
        panels = int(max(2, np.ceil((hi - lo) * (2.0 * rate + 2.0) / 2.0))) * refine
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        out.append((lo, hi, (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()))
    return out


def _inv2(B):
    inv = np.empty_like(B)
    inv[..., 0, 0] = B[..., 1, 1]
    inv[..., 1, 1] = B[..., 0, 0]
    inv[..., 0, 1] = -B[..., 0, 1]
    inv[..., 1, 0] = -B[..., 1, 0]
    return inv


def d2_delta_all(
    profile: MaterialProfile,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    table: MatricantTable | None = None,
    refine: int = 1,
) -> dict[str, complex]:
    """All three second derivatives from the ordered double integral.

    Uses ``d2/d(w^2)^2 = -II[rho rho]``, ``d2/d(k^2)^2 = -II[mu2 mu2]`` and
    ``d2/d(w^2)d(k^2) = 1/2 II[rho mu2 + mu2 rho]`` where
    ``II[f g] = int_0^1 ds1 int_0^s1 ds2 f(s1) g(s2) M2(s2+1, s1) M2(s1, s2)``.
    The triangle is split into blocks of smooth pieces; diagonal blocks use a
    collapsed (Duffy) map so that every block integrand is smooth.
    """
    tab = table or MatricantTable(profile, omega2, k2, cfg)
    rules = _piece_rules(profile, omega2, k2, cfg.quad_order, refine)
    tg, wt = np.polynomial.legendre.leggauss(cfg.quad_order)
    acc = {"ww": 0.0 + 0.0j, "kk": 0.0 + 0.0j, "wk": 0.0 + 0.0j}

    def block(s1, s2, weight):
        P1 = tab.at(s1)
        P2 = tab.at(s2)
        S1 = tab.to_end(s1)
        a = (P2 @ S1)[..., 0, 1]  # M2(s2+1, s1)
        b = (P1 @ _inv2(P2))[..., 0, 1]  # M2(s1, s2)
        r1, _, u1 = profile.coefficients(s1)
        r2, _, u2 = profile.coefficients(s2)
        kern = weight * a * b
        acc["ww"] += np.sum(kern * r1 * r2)
        acc["kk"] += np.sum(kern * u1 * u2)
        acc["wk"] += np.sum(kern * (r1 * u2 + u1 * r2))

    for i, (ai, bi, yi, wi) in enumerate(rules):
        for j in range(i):
            _, _, yj, wj = rules[j]
            s1, s2 = np.meshgrid(yi, yj, indexing="ij")
            block(s1.ravel(), s2.ravel(), np.outer(wi, wj).ravel())
        # diagonal block: s2 = ai + (s1 - ai) t with a composite rule in t
        n_t = max(1, yi.size // cfg.quad_order)
        edges = np.linspace(0.0, 1.0, n_t + 1)
        tt = (0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * tg).ravel()
        wtt = (0.5 * np.diff(edges)[:, None] * wt).ravel()
        s1 = np.repeat(yi, tt.size)
        jac = s1 - ai
        s2 = ai + jac * np.tile(tt, yi.size)
        block(s1, s2, np.repeat(wi, tt.size) * jac * np.tile(wtt, yi.size))
    return {"w2w2": -acc["ww"], "k2k2": -acc["kk"], "w2k2": 0.5 * acc["wk"]}


_D2_KEYS = {
    "w2w2": "w2w2",
    "ω²ω²": "w2w2",
    "k2k2": "k2k2",
    "k²k²": "k2k2",
    "w2k2": "w2k2",
    "ω²k²": "w2k2",
    "k2w2": "w2k2",
}


def d2_delta(
    profile: MaterialProfile,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    which: str = "w2w2",
    table: MatricantTable | None = None,
):
    """One second derivative: ``which`` in {``w2w2``, ``k2k2``, ``w2k2``}."""
    key = _D2_KEYS.get(which)
    if key is None:
        raise ValueError(f"unknown second derivative {which!r}")
    return _as_real(complex(d2_delta_all(profile, omega2, k2, cfg, table)[key]))


def d2_delta_square_form(profile: MaterialProfile, omega2: complex, k2: complex, cfg: QuadratureConfig = DEFAULT_CONFIG, n: int = 200):
    """``d2 Delta / d(w^2)^2`` from the full-period (square-domain) form.

    ``-1/2 int_0^1 dy int_0^1 dt rho(y) rho(y+t) M2(y+1, y+t) M2(y+t, y)``,
    evaluated with a midpoint tensor rule; used only as a consistency check.
    """
    tab = MatricantTable(profile, omega2, k2, cfg)
    g = (np.arange(n) + 0.5) / n
    y, t = np.meshgrid(g, g, indexing="ij")
    y, t = y.ravel(), t.ravel()
    Py = tab.at(y)
    Pyt = tab.at(y + t)
    Py1 = tab.at(y + 1.0)
    a = (Py1 @ _inv2(Pyt))[..., 0, 1]
    b = (Pyt @ _inv2(Py))[..., 0, 1]
    r1, _, _ = profile.coefficients(y)
    r2, _, _ = profile.coefficients(y + t)
    return _as_real(complex(-0.5 * np.sum(r1 * r2 * a * b) / n**2))


def d2_delta_fd(profile: MaterialProfile, omega2: float, k2: float, cfg: QuadratureConfig = DEFAULT_CONFIG, step: float = 1e-3):
    """Central second differences of ``Delta`` (absolute step scaled by max(1, |x|))."""
    hw = step * max(1.0, abs(omega2))
    hk = step * max(1.0, abs(k2))
    W = [omega2 + hw, omega2, omega2 - hw, omega2, omega2, omega2 + hw, omega2 + hw, omega2 - hw, omega2 - hw]
    Kk = [k2, k2, k2, k2 + hk, k2 - hk, k2 + hk, k2 - hk, k2 + hk, k2 - hk]
    v = delta_values(profile, W, Kk, cfg)
    return {
        "w2w2": _as_real(complex((v[0] - 2 * v[1] + v[2]) / hw**2)),
        "k2k2": _as_real(complex((v[3] - 2 * v[1] + v[4]) / hk**2)),
        "w2k2": _as_real(complex((v[5] - v[6] - v[7] + v[8]) / (4 * hw * hk))),
    }
