"""Quasi-periodic Green function and resolvent of the unit-cell operators.

For ``(A_K - omega^2) u = g`` (``A_K u = rho^{-1}[-(mu1 u')' + k^2 mu2 u]``) or
``(B_K - k^2) u = g`` (``B_K u = mu2^{-1}[(mu1 u')' + omega^2 rho u]``) with
``u(1) = e^{iK} u(0)``, the state ``eta = (u, i mu1 u')`` solves
``eta' - Q eta = (0, i f)`` with ``f = -rho g`` (A-operator) or ``f = mu2 g``
(B-operator).  Its solution is ``eta(y) = int_0^1 G(y, s) (0, i f(s)) ds`` with
the tensor kernel

    G(y, s) = M(y, s) H(y - s) - M(y, 0) [M(1, 0) - e^{iK} I]^{-1} M(1, s),

so that ``u = int_0^1 G(y, s) f(s) ds`` with the scalar kernel
``G(y, s) = i G_12(y, s)``.  For real ``K`` and real parameters the tensor
kernel satisfies ``G(y, s) = -T G^+(s, y) T`` and the scalar kernel is
Hermitian, ``G(y, s) = G^*(s, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import interpolate

from .errors import OnSpectrum
from .matricant import DEFAULT_CONFIG, T_SWAP, MatricantTable, QuadratureConfig
from .profile import MaterialProfile

__all__ = [
    "GreenEval",
    "COND_MAX",
    "RESOLVENT_TOL",
    "GreenFunction",
    "green_tensor",
    "green_scalar",
    "green_homogeneous",
    "resolvent_apply",
    "operator_residual",
    "symmetry_residuals",
]

COND_MAX = 1e12
RESOLVENT_TOL = 1e-12


@dataclass
class GreenEval:
    """Tensor kernel values ``G(y, s)`` at one ``(K, omega^2, k^2)``."""

    y: np.ndarray
    s: np.ndarray
    K: float
    lam: tuple[complex, complex]
    tensor: np.ndarray  # shape broadcast(y, s) + (2, 2)

    @property
    def scalar(self) -> np.ndarray:
        return 1j * self.tensor[..., 0, 1]


def _inv2(B):
    inv = np.empty_like(B)
    inv[..., 0, 0] = B[..., 1, 1]
    inv[..., 1, 1] = B[..., 0, 0]
    inv[..., 0, 1] = -B[..., 0, 1]
    inv[..., 1, 0] = -B[..., 1, 0]
    return inv


class GreenFunction:
    """Green kernel at fixed ``(K, omega^2, k^2)``; ``[M(1,0) - e^{iK} I]^{-1}`` is computed once.

    Raises
    ------
    OnSpectrum
        If ``e^{iK}`` is (numerically) an eigenvalue of ``M(1, 0)``: the
        condition number of ``M(1, 0) - e^{iK} I`` exceeds ``COND_MAX`` or
        ``|Delta - cos K| <= RESOLVENT_TOL``.
    """

    def __init__(
        self,
        profile: MaterialProfile,
        K: complex,
        omega2: complex,
        k2: complex,
        cfg: QuadratureConfig = DEFAULT_CONFIG,
        table: MatricantTable | None = None,
    ):
        self.profile = profile
        self.K = K
        self.omega2, self.k2 = complex(omega2), complex(k2)
        self.table = table or MatricantTable(profile, omega2, k2, cfg)
        q = np.exp(1j * K)
        B = self.table.M - q * np.eye(2)
        cond = np.linalg.cond(B)
        gap = abs(self.table.delta - np.cos(K))
        if not np.isfinite(cond) or cond > COND_MAX or gap <= RESOLVENT_TOL:
            raise OnSpectrum(f"e^(iK) is an eigenvalue of M(1,0): cond={cond:.3g}, |Delta - cos K|={gap:.3g}")
        self.cond = float(cond)
        self.R = np.linalg.inv(B)
        self.q = q

    def tensor(self, y, s) -> np.ndarray:
        """``G(y, s)`` for broadcastable ``y``, ``s`` in ``[0, 1]`` (``H(0) = 1``)."""
        y, s = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(s, dtype=float))
        tab = self.table
        Py = tab.at(y)
        direct = tab.between(y, s) * (y >= s)[..., None, None]
        back = np.einsum("...ij,jk,...kl->...il", Py, self.R, tab.to_end(s))
        return direct - back

    def scalar(self, y, s) -> np.ndarray:
        """Scalar kernel ``i G_12(y, s)``."""
        return 1j * self.tensor(y, s)[..., 0, 1]

    def solve(self, y, f, nodes: int = 4, weight=None) -> np.ndarray:
        """State ``eta`` on the uniform grid ``y`` for the source ``(0, i w f)``.

        Uses the factorisation ``G(y, s) = P(y) [H(y - s) I - R M] P(s)^{-1}``
        with ``P(y) = M(y, 0)``, so the kernel integral reduces to the running
        integral ``F(y) = int_0^y P(s)^{-1} (0, i f(s)) ds``:
        ``eta(y) = P(y) [F(y) - R M F(1)]``.  The sampled ``f`` is interpolated
        by a cubic spline and each grid interval is integrated by ``nodes``-point
        Gauss-Legendre with ``P(s)`` evaluated exactly, so the coincidence
        point ``s = y`` is never a quadrature abscissa.  The optional
        ``weight(s)`` (a material coefficient) is applied at the abscissae
        rather than interpolated, so coefficient jumps - including the one at
        the period edge - do not pollute the spline.
        """
        y = np.asarray(y, dtype=float)
        spline = interpolate.CubicSpline(y, np.asarray(f, dtype=complex))
        xg, wg = np.polynomial.legendre.leggauss(nodes)
        lo, hi = y[:-1], y[1:]
        half = 0.5 * (hi - lo)
        s = (0.5 * (hi + lo))[:, None] + half[:, None] * xg[None, :]
        Ps = self.table.at(s)
        src = np.zeros(s.shape + (2,), dtype=complex)
        src[..., 1] = 1j * spline(s) * (1.0 if weight is None else weight(s))
        integrand = np.einsum("...ij,...j->...i", _inv2(Ps), src)
        pieces = np.einsum("n,mnj->mj", wg, integrand) * half[:, None]
        F = np.concatenate([np.zeros((1, 2), dtype=complex), np.cumsum(pieces, axis=0)])
        corr = self.R @ (self.table.M @ F[-1])
        return np.einsum("...ij,...j->...i", self.table.at(y), F - corr)


def green_tensor(
    profile: MaterialProfile,
    y,
    s,
    K: float,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Tensor Green kernel ``G(y, s)``; shape ``broadcast(y, s) + (2, 2)``.

    Raises
    ------
    OnSpectrum
    """
    return GreenFunction(profile, K, omega2, k2, cfg).tensor(y, s)


def green_scalar(profile: MaterialProfile, y, s, K: float, omega2: complex, k2: complex, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Scalar resolvent kernel ``i G_12(y, s)``."""
    return GreenFunction(profile, K, omega2, k2, cfg).scalar(y, s)


def green_homogeneous(rho: float, mu1: float, mu2: float, y, s, K: float, omega2: complex, k2: complex) -> np.ndarray:
    """Closed-form scalar kernel of a homogeneous medium.

    Solves ``mu1 G'' + (rho w^2 - mu2 k^2) G = delta(y - s)`` with
    ``G(y + 1, s) = e^{iK} G(y, s)`` as the quasi-periodic lattice sum of the
    free-space kernel ``e^{iq|x|}/(2iq mu1)``, ``q^2 = (rho w^2 - mu2 k^2)/mu1``:
    for ``0 <= x = y - s < 1``

        G = [e^{iqx} / (1 - e^{i(q-K)}) + e^{-iqx} e^{i(q+K)} / (1 - e^{i(q+K)})] / (2iq mu1)

    and ``G(x) = e^{-iK} G(x + 1)`` for ``x < 0``.
    """
    x = np.asarray(y, dtype=float) - np.asarray(s, dtype=float)
    q = np.sqrt(complex((rho * omega2 - mu2 * k2) / mu1))
    if q == 0:
        q = 1e-300 + 0j
    neg = x < 0
    xx = np.where(neg, x + 1.0, x)
    a = np.exp(1j * q * xx) / (1.0 - np.exp(1j * (q - K)))
    b = np.exp(-1j * q * xx) * np.exp(1j * (q + K)) / (1.0 - np.exp(1j * (q + K)))
    g = (a + b) / (2j * q * mu1)
    return np.where(neg, np.exp(-1j * K) * g, g)


def _forcing_weight(profile, y, mode):
    rho, _, mu2 = profile.coefficients(y)
    if mode in ("A", "a", "A-operator"):
        return -rho
    if mode in ("B", "b", "B-operator"):
        return mu2
    raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")


def resolvent_apply(
    profile: MaterialProfile,
    K: float,
    mode: str,
    lam: tuple[complex, complex],
    forcing,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    return_state: bool = False,
):
    """Apply the resolvent to a forcing sampled on the uniform grid ``y_i = i/(n-1)``.

    Parameters
    ----------
    K : float
        Floquet parameter of the quasi-periodic condition ``u(1) = e^{iK} u(0)``.
    mode : {"A", "B"}
        ``"A"`` solves ``(A_K - omega^2) u = g`` at fixed ``k^2``; ``"B"``
        solves ``(B_K - k^2) u = g`` at fixed ``omega^2``.
    lam : (omega^2, k^2)
    forcing : array_like, shape (n,)
        ``g`` at ``n >= 3`` equispaced points including both cell ends.
    return_state : bool
        Also return ``mu1 u'`` (from the second state component).

    Returns
    -------
    u : ndarray, shape (n,)
        Sampled response (plus ``mu1 u'`` if requested).

    Raises
    ------
    OnSpectrum
        If ``lam`` lies on the spectrum for this ``K``.
    """
    g = np.asarray(forcing, dtype=complex)
    if g.ndim != 1 or g.size < 3:
        raise ValueError("forcing must be a 1-D array of at least 3 samples")
    y = np.linspace(0.0, 1.0, g.size)
    omega2, k2 = lam
    gf = GreenFunction(profile, K, omega2, k2, cfg)
    _forcing_weight(profile, y[:1], mode)  # validates ``mode``
    eta = gf.solve(y, g, weight=lambda s: _forcing_weight(profile, s, mode))
    u = eta[:, 0]
    if return_state:
        return u, -1j * eta[:, 1]
    return u


def _d1(v: np.ndarray, h: float, order: int) -> np.ndarray:
    """Central first difference on the interior (drops ``order // 2`` nodes per end)."""
    if order == 2:
        return (v[2:] - v[:-2]) / (2.0 * h)
    return (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)


def operator_residual(
    profile: MaterialProfile,
    K: float,
    mode: str,
    lam: tuple[complex, complex],
    forcing,
    u,
    order: int = 2,
) -> dict[str, float]:
    """Finite-difference check of a resolvent solution on its uniform grid.

    Returns ``{"operator": ||(L - lam) u - g|| / ||g||, "quasi_periodic":
    |u(1) - e^{iK} u(0)| / max|u|}``.  With ``order=2`` the flux ``(mu1 u')'``
    is the conservative second-order difference at interior nodes; with
    ``order=4`` it is the fourth-order central difference applied twice in
    flux form (``mu1 u'`` first), evaluated only at nodes whose 9-point
    stencil stays inside one smooth piece of the profile.  The second-order
    check is limited by its own ``O(h^2)`` truncation error, which dominates
    for oscillatory solutions on coarse grids.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    g = np.asarray(forcing, dtype=complex)
    u = np.asarray(u, dtype=complex)
    n = u.size
    h = 1.0 / (n - 1)
    y = np.linspace(0.0, 1.0, n)
    omega2, k2 = lam
    if order == 2:
        mid = 0.5 * (y[1:] + y[:-1])
        _, mu1_mid, _ = profile.coefficients(mid)
        div = np.diff(mu1_mid * np.diff(u) / h) / h  # (mu1 u')' at interior nodes
        sl = slice(1, n - 1)
    else:
        _, mu1_in, _ = profile.coefficients(y[2:-2])
        div = _d1(mu1_in * _d1(u, h, 4), h, 4)
        sl = slice(4, n - 4)
    keep = np.ones(n, dtype=bool)
    keep[: sl.start] = False
    keep[sl.stop :] = False
    if order == 4:
        for seg in profile.segments[1:]:
            keep[np.abs(y - seg.start) < 4.0 * h + 1e-14] = False
    keep_in = keep[sl]
    rho, _, mu2 = profile.coefficients(y[sl])
    ui = u[sl]
    if mode in ("A", "a", "A-operator"):
        lhs = (-div + k2 * mu2 * ui) / rho - omega2 * ui
    else:
        lhs = (div + omega2 * rho * ui) / mu2 - k2 * ui
    gi = g[sl]
    if not np.any(keep_in):
        raise ValueError(f"grid of {n} points has no node where the order-{order} check applies")
    res = float(np.linalg.norm((lhs - gi)[keep_in]) / np.linalg.norm(gi[keep_in]))
    qp = float(abs(u[-1] - np.exp(1j * K) * u[0]) / max(np.max(np.abs(u)), 1e-300))
    return {"operator": res, "quasi_periodic": qp}


def symmetry_residuals(
    profile: MaterialProfile,
    K: float,
    omega2: float,
    k2: float,
    n: int = 16,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> dict[str, float]:
    """Residuals of the kernel symmetries on an ``n x n`` grid, diagonal excluded.

    ``tensor``: ``max|G(y, s) + T G^+(s, y) T|``; ``scalar``:
    ``max|G(y, s) - G^*(s, y)|`` for the scalar kernel; ``conj_transposed``:
    ``max|G_12(y, s) + G_12^*(s, y)|``.  All are relative to ``max|G|``.  On
    the diagonal the tensor identity is off by exactly the jump ``M(y, y) = I``
    carried by ``H(0) = 1`` (it would need ``H(0) = 1/2``), so ``y = s`` pairs
    are skipped.
    """
    gf = GreenFunction(profile, K, omega2, k2, cfg)
    pts = (np.arange(n) + 0.37) / n
    Y, S = np.meshgrid(pts, pts, indexing="ij")
    G = gf.tensor(Y, S)
    Gt = gf.tensor(S, Y)
    scale = float(np.max(np.abs(G)))
    off = ~np.eye(n, dtype=bool)
    GH = np.conj(np.swapaxes(Gt, -1, -2))
    tens = np.max(np.abs(G + T_SWAP @ GH @ T_SWAP)[off]) / scale
    gs = 1j * G[..., 0, 1]
    scal = np.max(np.abs(gs - np.conj(1j * Gt[..., 0, 1]))[off]) / scale
    c12 = np.max(np.abs(G[..., 0, 1] + np.conj(Gt[..., 0, 1]))[off]) / scale
    return {"tensor": float(tens), "scalar": float(scal), "conj_transposed": float(c12)}
