"""Propagator (matricant) of the first-order system for the state ``(u, i*mu1*u')``.

The wave equation ``(mu1 u')' - k^2 mu2 u = -omega^2 rho u`` is written as
``eta' = Q(y) eta`` with

    Q(y) = i * [[0, -1/mu1], [mu2 k^2 - rho omega^2, 0]],

and ``M(y, y0)`` denotes the solution matrix with ``M(y0, y0) = I``.

Numerical scheme
----------------
The unit cell is cut into smooth pieces (segments, split further at the knots
of sampled coefficients).  Constant pieces are propagated by one exact
exponential.  Smooth pieces are cut into uniform sub-slabs, each propagated by
the exponential of a traceless Magnus generator: the fourth-order two-point
Gauss commutator scheme by default, or the second-order midpoint-frozen
scheme.  The number of sub-slabs is doubled until the step-halving error
estimate of the full product meets ``abs_tol + rel_tol * |M|``.  Every factor
is the exact exponential of a traceless matrix, so ``det M = 1`` to rounding
and the structure of real-parameter propagators is preserved.

For a traceless ``A`` with ``A^2 = -theta^2 I``,
``exp(A) = cos(theta) I + sinc(theta) A``, evaluated from ``theta^2``
directly (series for small arguments), so no branch choice is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import OmegaZero, OutOfDomain, ToleranceNotReached
from .profile import MaterialProfile, sample

__all__ = [
    "QuadratureConfig",
    "Matricant2",
    "MonodromyRow",
    "MatricantTable",
    "q_matrix",
    "propagate",
    "monodromy",
    "monodromy_batch",
    "bilayer_monodromy",
    "m_functions",
    "expm_traceless",
    "GAMMA",
    "T_SWAP",
]

EPS_DET = 1e-10
EPS_SYM = 1e-9

#: ``Gamma`` picks the (2,1) slot that carries omega^2 and k^2 in ``Q``
GAMMA = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
#: exchange matrix used in the Hermitian-type structure identities
T_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)

_SCHEMES = {
    "fourth-order-commutator": 4,
    "magnus4": 4,
    "midpoint-frozen": 2,
    "midpoint": 2,
}

_GAUSS_OFFSET = np.sqrt(3.0) / 6.0
_COMMUTATOR_WEIGHT = np.sqrt(3.0) / 12.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy controls for product integration.

    Parameters
    ----------
    abs_tol, rel_tol : float
        Target for the step-halving error estimate of a full propagator,
        ``err <= abs_tol + rel_tol * max|M_ij|``.
    max_subdivision : int
        Cap on the total number of sub-slabs of one propagation.
    scheme : str
        ``"fourth-order-commutator"`` (default) or ``"midpoint-frozen"``.
    strict : bool
        Raise :class:`ToleranceNotReached` instead of flagging the result.
    quad_order : int
        Gauss-Legendre order per panel for integrals over the cell.
    """

    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    max_subdivision: int = 1 << 16
    scheme: str = "fourth-order-commutator"
    strict: bool = False
    quad_order: int = 10

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivision < 8:
            raise ValueError("max_subdivision must be >= 8")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(_SCHEMES)}")

    @property
    def order(self) -> int:
        return _SCHEMES[self.scheme]


DEFAULT_CONFIG = QuadratureConfig()


# --------------------------------------------------------------------------
# result containers
# --------------------------------------------------------------------------


@dataclass
class Matricant2:
    """A 2x2 propagator ``M(y, y0)`` with its evaluation metadata."""

    matrix: np.ndarray
    omega2: complex
    k2: complex
    y: float
    y0: float
    error_estimate: float = 0.0
    converged: bool = True

    @property
    def M1(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def M2(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def M3(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def M4(self) -> complex:
        return complex(self.matrix[1, 1])

    @property
    def det(self) -> complex:
        m = self.matrix
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    def structure_residual(self) -> float:
        """``max(|Im M1|, |Im M4|, |Re M2|, |Re M3|)``: zero for real parameters."""
        m = self.matrix
        return float(max(abs(m[0, 0].imag), abs(m[1, 1].imag), abs(m[0, 1].real), abs(m[1, 0].real)))

    def check_invariants(self, eps_det: float = EPS_DET, eps_sym: float = EPS_SYM) -> bool:
        ok = abs(self.det - 1.0) <= eps_det
        if np.isreal(self.omega2) and np.isreal(self.k2):
            ok = ok and self.structure_residual() <= eps_sym
        return bool(ok)


@dataclass(frozen=True)
class MonodromyRow:
    """Entries of ``M(y+1, y) = [[m1, i m2], [i m3, m4]]`` at base point ``y``."""

    y: float
    m1: float
    m2: float
    m3: float
    m4: float

    @property
    def det(self) -> float:
        return self.m1 * self.m4 + self.m2 * self.m3


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------


def _cos_sinc(z):
    """``cos(sqrt(z))`` and ``sin(sqrt(z))/sqrt(z)`` for complex arrays ``z``.

    Real arguments (the common case of real ``omega^2, k^2``) are handled in
    real arithmetic with ``cosh``/``sinh`` for negative ``z``.
    """
    z = np.asarray(z, dtype=complex)
    if not np.any(z.imag):
        return _cos_sinc_real(z.real)
    small = np.abs(z) < 1e-3
    th = np.sqrt(np.where(small, 1.0, z))
    c = np.cos(th)
    s = np.sin(th) / th
    if np.any(small):
        zs = np.where(small, z, 0.0)
        c_ser = 1 - zs / 2 * (1 - zs / 12 * (1 - zs / 30 * (1 - zs / 56)))
        s_ser = 1 - zs / 6 * (1 - zs / 20 * (1 - zs / 42 * (1 - zs / 72)))
        c = np.where(small, c_ser, c)
        s = np.where(small, s_ser, s)
    return c, s


def _cos_sinc_real(x):
    c = np.empty_like(x)
    s = np.empty_like(x)
    small = np.abs(x) < 1e-3
    pos = (x > 0) & ~small
    neg = (x < 0) & ~small
    if np.any(pos):
        t = np.sqrt(x[pos])
        c[pos] = np.cos(t)
        s[pos] = np.sin(t) / t
    if np.any(neg):
        t = np.sqrt(-x[neg])
        c[neg] = np.cosh(t)
        s[neg] = np.sinh(t) / t
    if np.any(small):
        xs = x[small]
        c[small] = 1 - xs / 2 * (1 - xs / 12 * (1 - xs / 30 * (1 - xs / 56)))
        s[small] = 1 - xs / 6 * (1 - xs / 20 * (1 - xs / 42 * (1 - xs / 72)))
    return c, s


def _mul2(A, B):
    """Batched 2x2 product ``A @ B`` written out element-wise (faster than matmul)."""
    out = np.empty(np.broadcast_shapes(A.shape, B.shape), dtype=np.result_type(A, B))
    a00, a01, a10, a11 = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    b00, b01, b10, b11 = B[..., 0, 0], B[..., 0, 1], B[..., 1, 0], B[..., 1, 1]
    out[..., 0, 0] = a00 * b00 + a01 * b10
    out[..., 0, 1] = a00 * b01 + a01 * b11
    out[..., 1, 0] = a10 * b00 + a11 * b10
    out[..., 1, 1] = a10 * b01 + a11 * b11
    return out


def _exp_entries(a, b, c):
    """Exponential of ``[[a, b], [c, -a]]`` stacked into ``(..., 2, 2)``."""
    cs, sn = _cos_sinc(-(a * a + b * c))
    out = np.empty(np.broadcast(a, b, c).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = cs + sn * a
    out[..., 0, 1] = sn * b
    out[..., 1, 0] = sn * c
    out[..., 1, 1] = cs - sn * a
    return out


def expm_traceless(A: np.ndarray) -> np.ndarray:
    """Exact exponential of a traceless 2x2 matrix (or stack of them)."""
    A = np.asarray(A, dtype=complex)
    a = 0.5 * (A[..., 0, 0] - A[..., 1, 1])
    return _exp_entries(a, A[..., 0, 1], A[..., 1, 0])


def q_matrix(profile: MaterialProfile, y: float, omega2: complex, k2: complex) -> np.ndarray:
    """System matrix ``Q(y) = i [[0, -1/mu1], [mu2 k^2 - rho omega^2, 0]]``."""
    rho, mu1, mu2 = sample(profile, y)
    return 1j * np.array([[0.0, -1.0 / mu1], [mu2 * k2 - rho * omega2, 0.0]], dtype=complex)


def _slab_exponentials(profile, lo, hi, w2, k2, order):
    """Sub-slab propagators for slabs ``[lo_j, hi_j]`` and parameters ``w2, k2`` of shape (B,).

    Returns an array of shape ``(B, N, 2, 2)``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    h = hi - lo
    w2 = np.asarray(w2, dtype=complex)[:, None]
    k2 = np.asarray(k2, dtype=complex)[:, None]
    if order == 4:
        y1 = lo + h * (0.5 - _GAUSS_OFFSET)
        y2 = lo + h * (0.5 + _GAUSS_OFFSET)
        r1, m11, m21 = profile.coefficients(y1)
        r2, m12, m22 = profile.coefficients(y2)
        b1, b2 = -1j / m11, -1j / m12
        c1 = 1j * (m21 * k2 - r1 * w2)
        c2 = 1j * (m22 * k2 - r2 * w2)
        a = _COMMUTATOR_WEIGHT * h * h * (b2 * c1 - b1 * c2)
        B = 0.5 * h * (b1 + b2)
        C = 0.5 * h * (c1 + c2)
        B = np.broadcast_to(B, a.shape)
    else:
        ym = lo + 0.5 * h
        r, m1, m2 = profile.coefficients(ym)
        C = 1j * h * (m2 * k2 - r * w2)
        B = np.broadcast_to(-1j * h / m1, C.shape)
        a = np.zeros(C.shape, dtype=complex)
    return _exp_entries(a, B, C)


def _tree_product(E: np.ndarray) -> np.ndarray:
    """Ordered product ``E[..., N-1] @ ... @ E[..., 0]`` along axis -3."""
    while E.shape[-3] > 1:
        n = E.shape[-3]
        if n % 2:
            eye = np.broadcast_to(np.eye(2, dtype=complex), E.shape[:-3] + (1, 2, 2))
            E = np.concatenate([E, eye], axis=-3)
        E = _mul2(E[..., 1::2, :, :], E[..., 0::2, :, :])
    return E[..., 0, :, :]


def _prefix_products(E: np.ndarray) -> np.ndarray:
    """``P[i] = E[i-1] @ ... @ E[0]`` for ``i = 0..N`` (``P[0] = I``); E has shape (N,2,2)."""
    A = E.copy()
    d = 1
    n = A.shape[0]
    while d < n:
        A[d:] = _mul2(A[d:], A[:-d])
        d *= 2
    return np.concatenate([np.eye(2, dtype=complex)[None], A], axis=0)


def _suffix_products(E: np.ndarray) -> np.ndarray:
    """``S[i] = E[N-1] @ ... @ E[i]`` for ``i = 0..N`` (``S[N] = I``)."""
    A = E.copy()
    d = 1
    n = A.shape[0]
    while d < n:
        A[:-d] = _mul2(A[d:], A[:-d])
        d *= 2
    return np.concatenate([A, np.eye(2, dtype=complex)[None]], axis=0)


def _pieces_between(profile: MaterialProfile, a: float, b: float):
    """Smooth pieces of the periodic extension intersected with ``[a, b]``."""
    out = []
    base = profile.pieces()
    const = [profile.segments[i].is_constant for (_, _, i) in base]
    for n in range(int(np.floor(a)), int(np.ceil(b)) + 1):
        for (pa, pb, _), c in zip(base, const):
            lo, hi = max(a, pa + n), min(b, pb + n)
            if hi > lo + 1e-15:
                out.append((lo, hi, c))
    return out


def _local_rate(profile, lo, hi, w2, k2) -> float:
    """Largest local wavenumber/decay rate sqrt(|rho w^2 - mu2 k^2| / mu1) on a piece."""
    ys = np.linspace(lo, hi, 9)[1:-1] if hi - lo > 0 else np.array([lo])
    rho, mu1, mu2 = profile.coefficients(ys)
    w2 = np.atleast_1d(np.asarray(w2, dtype=complex))[:, None]
    k2 = np.atleast_1d(np.asarray(k2, dtype=complex))[:, None]
    return float(np.sqrt(np.max(np.abs(rho * w2 - mu2 * k2) / mu1)))


class _Partition:
    """Sub-slab partition of ``[a, b]`` with a per-piece subdivision count."""

    def __init__(self, pieces, counts):
        edges_lo, edges_hi = [], []
        for (lo, hi, _), n in zip(pieces, counts):
            e = np.linspace(lo, hi, n + 1)
            e[-1] = hi
            edges_lo.append(e[:-1])
            edges_hi.append(e[1:])
        self.lo = np.concatenate(edges_lo)
        self.hi = np.concatenate(edges_hi)

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.lo, self.hi[-1:]])

    def __len__(self):
        return self.lo.size


def _converged_slabs(profile, a, b, w2, k2, cfg: QuadratureConfig):
    """Converge the sub-slab partition of ``[a, b]`` for a batch of parameters.

    Returns ``(partition, E, product, err, converged)`` where ``E`` has shape
    ``(B, N, 2, 2)`` and ``product`` has shape ``(B, 2, 2)``.
    """
    w2 = np.atleast_1d(np.asarray(w2, dtype=complex))
    k2 = np.atleast_1d(np.asarray(k2, dtype=complex))
    pieces = _pieces_between(profile, a, b)
    order = cfg.order
    smooth = [not c for (_, _, c) in pieces]
    if not any(smooth):
        part = _Partition(pieces, [1] * len(pieces))
        E = _slab_exponentials(profile, part.lo, part.hi, w2, k2, order)
        return part, E, _tree_product(E), np.zeros(w2.shape), True
    counts = []
    for lo, hi, c in pieces:
        if c:
            counts.append(1)
        else:
            rate = _local_rate(profile, lo, hi, w2, k2)
            counts.append(int(max(4, np.ceil((hi - lo) * (rate + 4.0) / 0.5))))
    counts = np.array(counts)
    part = _Partition(pieces, counts)
    E = _slab_exponentials(profile, part.lo, part.hi, w2, k2, order)
    prod = _tree_product(E)
    factor = 2**order - 1
    while True:
        counts2 = np.where(smooth, counts * 2, 1)
        part2 = _Partition(pieces, counts2)
        E2 = _slab_exponentials(profile, part2.lo, part2.hi, w2, k2, order)
        prod2 = _tree_product(E2)
        err = np.max(np.abs(prod2 - prod), axis=(-2, -1)) / factor
        scale = np.max(np.abs(prod2), axis=(-2, -1))
        ok = bool(np.all(err <= cfg.abs_tol + cfg.rel_tol * scale))
        if ok or len(part2) * 2 > cfg.max_subdivision:
            if not ok and cfg.strict:
                raise ToleranceNotReached(
                    f"error estimate {err.max():.3e} after {len(part2)} sub-slabs on [{a}, {b}]"
                )
            return part2, E2, prod2, err, ok
        # the estimate scales like N^-order: jump straight to the predicted count
        target = cfg.abs_tol + cfg.rel_tol * scale
        ratio = float(np.max(err / target))
        jump = int(np.clip(np.ceil(ratio ** (1.0 / order)), 1, 64))
        cap = max(1, cfg.max_subdivision // (2 * max(1, len(part2))))
        jump = min(jump, cap)
        if jump > 1:
            counts2 = np.where(smooth, counts2 * jump, 1)
            part2 = _Partition(pieces, counts2)
            E2 = _slab_exponentials(profile, part2.lo, part2.hi, w2, k2, order)
            prod2 = _tree_product(E2)
        counts, part, E, prod = counts2, part2, E2, prod2


# --------------------------------------------------------------------------
# public propagation API
# --------------------------------------------------------------------------


def propagate(
    profile: MaterialProfile,
    y0: float,
    y: float,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> Matricant2:
    """Propagator ``M(y, y0)`` for ``0 <= y0 <= y`` (coefficients extended periodically)."""
    if y0 < 0 or y < y0:
        raise OutOfDomain(f"need 0 <= y0 <= y, got y0={y0}, y={y}")
    if y == y0:
        return Matricant2(np.eye(2, dtype=complex), omega2, k2, y, y0)
    _, _, prod, err, ok = _converged_slabs(profile, y0, y, [omega2], [k2], cfg)
    return Matricant2(prod[0], omega2, k2, y, y0, float(err[0]), ok)


def monodromy_batch(profile: MaterialProfile, omega2, k2, cfg: QuadratureConfig = DEFAULT_CONFIG, y0: float = 0.0):
    """Vectorised ``M(y0+1, y0)`` for arrays of parameters; returns ``(B, 2, 2)`` and error estimates."""
    w2, kk = np.broadcast_arrays(np.asarray(omega2, dtype=complex), np.asarray(k2, dtype=complex))
    shape = w2.shape
    _, _, prod, err, _ = _converged_slabs(profile, y0, y0 + 1.0, w2.ravel(), kk.ravel(), cfg)
    return prod.reshape(shape + (2, 2)), err.reshape(shape)


def monodromy(
    profile: MaterialProfile,
    y0: float,
    omega2: complex,
    k2: complex,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    path: str = "direct",
) -> Matricant2:
    """Monodromy matrix ``M(y0+1, y0)``.

    ``path="direct"`` propagates over ``[y0, y0+1]``; ``path="similarity"``
    forms ``M(y0,0) M(1,0) M(y0,0)^{-1}``.
    """
    if not (0.0 <= y0 < 1.0):
        raise OutOfDomain(f"y0={y0} outside [0, 1)")
    if path == "direct":
        return propagate(profile, y0, y0 + 1.0, omega2, k2, cfg)
    if path != "similarity":
        raise ValueError("path must be 'direct' or 'similarity'")
    m1 = propagate(profile, 0.0, 1.0, omega2, k2, cfg)
    my = propagate(profile, 0.0, y0, omega2, k2, cfg)
    A = my.matrix
    inv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    mat = A @ m1.matrix @ inv
    return Matricant2(mat, omega2, k2, y0 + 1.0, y0, m1.error_estimate, m1.converged and my.converged)


def bilayer_monodromy(layer1, layer2, omega: float, k: float, fallback: bool = True) -> Matricant2:
    """Closed-form monodromy of a two-layer cell.

    Each layer is ``(rho, mu1, mu2, d)`` with ``d1 + d2 = 1``; layer 1 occupies
    ``[0, d1)``.  With impedances ``Z_j = sqrt(rho_j mu1_j) sqrt(1 - mu2_j k^2 /
    (rho_j omega^2))`` and phases ``psi_j = omega Z_j d_j / mu1_j``, the product
    of the two layer propagators is written with ``cos psi_j``, ``sin psi_j / Z_j``
    and ``Z_j sin psi_j``, all even in the sign of ``Z_j``; the off-diagonal
    entries carry the factors ``1/omega`` and ``omega`` of the state vector
    ``(u, i mu1 u')``.

    At ``omega = 0`` the formula is singular; with ``fallback=True`` the
    product integrator is used instead, otherwise :class:`OmegaZero` is raised.
    """
    (r1, a1, b1, d1), (r2, a2, b2, d2) = layer1, layer2
    if abs(d1 + d2 - 1.0) > 1e-12:
        raise ValueError("layer thicknesses must sum to 1")
    if omega == 0:
        if not fallback and k != 0:
            raise OmegaZero("closed form undefined at omega = 0 with k != 0")
        prof = MaterialProfile.layered([layer1, layer2])
        return propagate(prof, 0.0, 1.0, 0.0, k * k)
    w = complex(omega)
    z1 = np.sqrt(complex(r1 * a1)) * np.sqrt(1 - b1 * k * k / (r1 * w * w))
    z2 = np.sqrt(complex(r2 * a2)) * np.sqrt(1 - b2 * k * k / (r2 * w * w))
    p1, p2 = w * z1 * d1 / a1, w * z2 * d2 / a2
    c1, c2 = np.cos(p1), np.cos(p2)
    # sin(psi)/Z and Z sin(psi) written without dividing by a possibly zero Z
    _, sc1 = _cos_sinc(p1 * p1)
    _, sc2 = _cos_sinc(p2 * p2)
    s1_over_z1 = sc1 * w * d1 / a1
    s2_over_z2 = sc2 * w * d2 / a2
    z1_s1 = z1 * z1 * s1_over_z1
    z2_s2 = z2 * z2 * s2_over_z2
    m1 = c2 * c1 - z1_s1 * s2_over_z2
    m4 = c2 * c1 - z2_s2 * s1_over_z1
    m2 = 1j * (c2 * s1_over_z1 + s2_over_z2 * c1)
    m3 = 1j * (z2_s2 * c1 + z1_s1 * c2)
    # change of state normalisation (u, i mu1 u'/(-omega)) -> (u, i mu1 u')
    mat = np.array([[m1, m2 / (-w)], [-w * m3, m4]], dtype=complex)
    return Matricant2(mat, omega * omega, k * k, 1.0, 0.0)


# --------------------------------------------------------------------------
# table of M(y, 0) over one period
# --------------------------------------------------------------------------


class MatricantTable:
    """``M(y, 0)`` and ``M(1, y)`` over one period for a single parameter pair.

    The converged sub-slab grid is stored together with prefix products
    ``M(t_i, 0)`` and suffix products ``M(1, t_i)``; values at arbitrary
    points are obtained by one partial sub-slab step from the nearest node.
    """

    def __init__(self, profile: MaterialProfile, omega2: complex, k2: complex, cfg: QuadratureConfig = DEFAULT_CONFIG):
        self.profile = profile
        self.omega2 = complex(omega2)
        self.k2 = complex(k2)
        self.cfg = cfg
        part, E, prod, err, ok = _converged_slabs(profile, 0.0, 1.0, [omega2], [k2], cfg)
        self.nodes = part.nodes
        self._E = E[0]
        self.M = prod[0]
        self.error_estimate = float(err[0])
        self.converged = ok
        self._P = _prefix_products(self._E)
        self._S = _suffix_products(self._E)

    # -- basic quantities ------------------------------------------------------------
    @property
    def delta(self) -> complex:
        return 0.5 * (self.M[0, 0] + self.M[1, 1])

    def _partial(self, lo, hi) -> np.ndarray:
        return _slab_exponentials(self.profile, lo, hi, [self.omega2], [self.k2], self.cfg.order)[0]

    def at(self, y) -> np.ndarray:
        """``M(y, 0)`` for ``y`` in ``[0, 2]``; shape ``y.shape + (2, 2)``."""
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        if np.any(flat < 0) or np.any(flat > 2.0 + 1e-14):
            raise OutOfDomain("table covers y in [0, 2]")
        second = flat > 1.0
        base = np.where(second, flat - 1.0, flat)
        idx = np.clip(np.searchsorted(self.nodes, base, side="right") - 1, 0, self.nodes.size - 2)
        out = _mul2(self._partial(self.nodes[idx], base), self._P[idx])
        if np.any(second):
            out[second] = _mul2(out[second], self.M)
        return out.reshape(y.shape + (2, 2))

    def to_end(self, y) -> np.ndarray:
        """``M(1, y)`` for ``y`` in ``[0, 1]``."""
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        idx = np.clip(np.searchsorted(self.nodes, flat, side="left"), 1, self.nodes.size - 1)
        out = _mul2(self._S[idx], self._partial(flat, self.nodes[idx]))
        return out.reshape(y.shape + (2, 2))

    def period_map(self, y) -> np.ndarray:
        """``M(y+1, y) = M(y, 0) M(1, y)`` (no matrix inversion involved)."""
        return _mul2(self.at(y), self.to_end(y))

    def between(self, y, y0) -> np.ndarray:
        """``M(y, y0) = M(y, 0) M(y0, 0)^{-1}`` by the composition law."""
        A = self.at(y)
        B = self.at(y0)
        inv = np.empty_like(B)
        inv[..., 0, 0] = B[..., 1, 1]
        inv[..., 1, 1] = B[..., 0, 0]
        inv[..., 0, 1] = -B[..., 0, 1]
        inv[..., 1, 0] = -B[..., 1, 0]
        return _mul2(A, inv)

    # -- quadrature over the cell ----------------------------------------------------
    def quadrature(self, refine: int = 1):
        """Gauss-Legendre nodes and weights on ``[0, 1]`` adapted to the local rate.

        Panels never straddle a piece boundary, so piecewise-smooth integrands
        are integrated at full order.
        """
        return cell_quadrature(self.profile, self.omega2, self.k2, self.cfg.quad_order, refine)

    def m_values(self, y):
        """Complex ``(m1, m2, m3, m4)`` arrays at ``y`` from ``M(y+1, y)``."""
        W = self.period_map(y)
        return W[..., 0, 0], -1j * W[..., 0, 1], -1j * W[..., 1, 0], W[..., 1, 1]


def cell_quadrature(profile: MaterialProfile, omega2, k2, order: int = 10, refine: int = 1, a: float = 0.0, b: float = 1.0):
    """Composite Gauss-Legendre rule on ``[a, b]`` respecting piece boundaries."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    ys, ws = [], []
    for lo, hi, const in _pieces_between(profile, a, b):
        rate = _local_rate(profile, lo, hi, omega2, k2)
        # the integrands of interest oscillate at up to twice the local rate
        panels = int(max(1, np.ceil((hi - lo) * (2.0 * rate + 2.0) / 2.0))) * refine
        if not const:
            panels = max(panels, 2 * refine)
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        ys.append((mid[:, None] + half[:, None] * xg[None, :]).ravel())
        ws.append((half[:, None] * wg[None, :]).ravel())
    return np.concatenate(ys), np.concatenate(ws)


def m_functions(
    profile: MaterialProfile,
    omega2: float,
    k2: float,
    grid: Iterable[float],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    table: MatricantTable | None = None,
) -> list[MonodromyRow]:
    """Real periodic functions ``m1..m4`` at the grid points (real parameters)."""
    tab = table or MatricantTable(profile, omega2, k2, cfg)
    g = np.asarray(list(grid), dtype=float)
    if np.any(g < 0) or np.any(g > 1):
        raise OutOfDomain("grid points must lie in [0, 1]")
    m1, m2, m3, m4 = tab.m_values(g)
    return [
        MonodromyRow(float(y), float(a.real), float(b.real), float(c.real), float(d.real))
        for y, a, b, c, d in zip(g, m1, m2, m3, m4)
    ]
