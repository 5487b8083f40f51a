"""Unit-period material profiles for the anti-plane wave equation.

A profile describes the density ``rho(y)`` and the two shear stiffnesses
``mu1(y)`` (normal to the layering) and ``mu2(y)`` (along the layering) on a
single period ``y in [0, 1)``.  Each coefficient is given piecewise on
half-open segments ``[a, b)`` by one of a small set of closed-form kinds
(constant, polynomial, ratio of polynomials, linearly interpolated samples).

All lengths are non-dimensional: a profile given with a physical period ``T``
is rescaled to the unit cell and ``T`` is kept in ``period_scale`` only so that
frequencies and wavenumbers can be converted back for output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .errors import DegenerateStiffness, OutOfDomain, ProfileError

__all__ = [
    "Constant",
    "Polynomial",
    "Rational",
    "Sampled",
    "CoefficientFn",
    "Segment",
    "MaterialProfile",
    "MonoclinicInput",
    "reduce_monoclinic",
    "average",
    "extremum",
    "sample",
    "as_coefficient",
]

#: number of uniform samples used to validate positivity and to bracket extrema
VALIDATION_SAMPLES = 10_000


# --------------------------------------------------------------------------
# coefficient functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """A constant coefficient value."""

    value: float
    kind = "constant"

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.full(y.shape, float(self.value))

    def derivative(self, y):
        return np.zeros(np.shape(y))

    def rescaled(self, period: float) -> "Constant":
        return self

    def integral(self, a: float, b: float) -> float:
        return float(self.value) * (b - a)


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in the absolute coordinate ``y``; coefficients in ascending order."""

    coefficients: tuple
    kind = "polynomial"

    def __init__(self, coefficients: Sequence[float]):
        c = tuple(float(v) for v in np.atleast_1d(coefficients))
        if not c:
            raise ProfileError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, y):
        return P.polyval(np.asarray(y, dtype=float), self.coefficients)

    def derivative(self, y):
        return P.polyval(np.asarray(y, dtype=float), P.polyder(self.coefficients))

    def rescaled(self, period: float) -> "Polynomial":
        # p(T*s) expressed in the unit coordinate s
        return Polynomial([c * period**j for j, c in enumerate(self.coefficients)])

    def integral(self, a: float, b: float) -> float:
        anti = P.polyint(self.coefficients)
        return float(P.polyval(b, anti) - P.polyval(a, anti))


@dataclass(frozen=True)
class Rational:
    """Ratio of two polynomials in ``y`` (ascending coefficients).

    Needed to represent exactly the reduced stiffness ``c55 - c45**2/c44`` of
    graded monoclinic media and profiles of constant normal impedance.
    """

    numerator: tuple
    denominator: tuple
    kind = "rational"

    def __init__(self, numerator: Sequence[float], denominator: Sequence[float]):
        object.__setattr__(self, "numerator", tuple(float(v) for v in np.atleast_1d(numerator)))
        object.__setattr__(self, "denominator", tuple(float(v) for v in np.atleast_1d(denominator)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return P.polyval(y, self.numerator) / P.polyval(y, self.denominator)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        n, d = self.numerator, self.denominator
        dn = P.polyval(y, P.polyder(n))
        dd = P.polyval(y, P.polyder(d))
        den = P.polyval(y, d)
        return (dn * den - P.polyval(y, n) * dd) / den**2

    def rescaled(self, period: float) -> "Rational":
        return Rational(
            [c * period**j for j, c in enumerate(self.numerator)],
            [c * period**j for j, c in enumerate(self.denominator)],
        )

    def integral(self, a: float, b: float) -> float:
        val, _ = integrate.quad(self, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        return float(val)


@dataclass(frozen=True)
class Sampled:
    """Linearly interpolated samples ``(y_i, v_i)`` with strictly increasing ``y_i``."""

    ys: tuple
    values: tuple
    kind = "sampled"

    def __init__(self, ys: Sequence[float], values: Sequence[float]):
        ys_a = np.asarray(ys, dtype=float)
        vs_a = np.asarray(values, dtype=float)
        if ys_a.ndim != 1 or ys_a.shape != vs_a.shape or ys_a.size < 2:
            raise ProfileError("sampled coefficient needs matching 1-D grids with >= 2 points")
        if np.any(np.diff(ys_a) <= 0):
            raise ProfileError("sampled grid must be strictly increasing")
        object.__setattr__(self, "ys", tuple(ys_a))
        object.__setattr__(self, "values", tuple(vs_a))

    def __call__(self, y):
        return np.interp(np.asarray(y, dtype=float), self.ys, self.values)

    def derivative(self, y):
        ys = np.asarray(self.ys)
        slopes = np.diff(self.values) / np.diff(ys)
        idx = np.clip(np.searchsorted(ys, np.asarray(y, dtype=float), side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def rescaled(self, period: float) -> "Sampled":
        return Sampled([v / period for v in self.ys], self.values)

    def integral(self, a: float, b: float) -> float:
        ys = np.asarray(self.ys)
        inner = ys[(ys > a) & (ys < b)]
        pts = np.concatenate([[a], inner, [b]])
        return float(np.trapezoid(self(pts), pts))

    def reciprocal_integral(self, a: float, b: float) -> float:
        """Exact integral of ``1/v`` for the piecewise-linear interpolant."""
        ys = np.asarray(self.ys)
        inner = ys[(ys > a) & (ys < b)]
        pts = np.concatenate([[a], inner, [b]])
        v = self(pts)
        dy = np.diff(pts)
        v0, v1 = v[:-1], v[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = dy * np.log(v1 / v0) / (v1 - v0)
        flat = np.abs(v1 - v0) <= 1e-12 * np.abs(v0)
        exact = np.where(flat, dy * 2.0 / (v0 + v1), exact)
        return float(np.sum(exact))


CoefficientFn = Union[Constant, Polynomial, Rational, Sampled]


def as_coefficient(value) -> CoefficientFn:
    """Coerce a number or coefficient object into a :data:`CoefficientFn`."""
    if isinstance(value, (Constant, Polynomial, Rational, Sampled)):
        return value
    if np.isscalar(value):
        return Constant(float(value))
    raise ProfileError(f"cannot interpret {value!r} as a coefficient function")


# --------------------------------------------------------------------------
# profile containers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Half-open interval ``[start, end)`` with its three coefficient functions."""

    start: float
    end: float
    rho: CoefficientFn
    mu1: CoefficientFn
    mu2: CoefficientFn

    def __post_init__(self):
        for name in ("rho", "mu1", "mu2"):
            object.__setattr__(self, name, as_coefficient(getattr(self, name)))

    @property
    def is_constant(self) -> bool:
        return all(getattr(self, n).kind == "constant" for n in ("rho", "mu1", "mu2"))

    def knots(self) -> list[float]:
        """Interior points where a coefficient has a derivative jump."""
        pts: set[float] = set()
        for name in ("rho", "mu1", "mu2"):
            fn = getattr(self, name)
            if fn.kind == "sampled":
                pts.update(y for y in fn.ys if self.start < y < self.end)
        return sorted(pts)


@dataclass(frozen=True)
class MaterialProfile:
    """Validated unit-period profile.

    Parameters
    ----------
    segments : sequence of Segment
        Ordered segments partitioning ``[0, 1)``.
    period_scale : float
        Physical period ``T`` the profile was defined with (unit labelling only).
    name : str
        Optional label used in CLI headers.
    """

    segments: tuple
    period_scale: float = 1.0
    name: str = ""
    _starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, segments: Sequence[Segment], period_scale: float = 1.0, name: str = ""):
        segs = tuple(segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "period_scale", float(period_scale))
        object.__setattr__(self, "name", name)
        self._validate()
        object.__setattr__(self, "_starts", np.array([s.start for s in segs]))

    # ---- construction helpers -------------------------------------------------
    @classmethod
    def from_physical(cls, segments: Sequence[Segment], period: float, name: str = "") -> "MaterialProfile":
        """Build from segments given on ``[0, period)`` and rescale to the unit cell."""
        if not period > 0:
            raise ProfileError("period must be positive", field="period")
        scaled = [
            Segment(
                s.start / period,
                s.end / period,
                as_coefficient(s.rho).rescaled(period),
                as_coefficient(s.mu1).rescaled(period),
                as_coefficient(s.mu2).rescaled(period),
            )
            for s in segments
        ]
        return cls(scaled, period_scale=period, name=name)

    @classmethod
    def layered(cls, layers: Sequence[tuple[float, float, float, float]], name: str = "") -> "MaterialProfile":
        """Piecewise-constant profile from ``(rho, mu1, mu2, thickness)`` tuples summing to 1."""
        total = sum(l[3] for l in layers)
        if abs(total - 1.0) > 1e-12:
            raise ProfileError(f"layer thicknesses sum to {total}, expected 1")
        segs, a = [], 0.0
        for i, (rho, mu1, mu2, d) in enumerate(layers):
            b = 1.0 if i == len(layers) - 1 else a + d
            segs.append(Segment(a, b, Constant(rho), Constant(mu1), Constant(mu2)))
            a = b
        return cls(segs, name=name)

    # ---- validation -------------------------------------------------------------
    def _validate(self) -> None:
        if not self.segments:
            raise ProfileError("profile needs at least one segment", field="segments")
        if not self.period_scale > 0:
            raise ProfileError("period_scale must be positive", field="period")
        expected = 0.0
        for i, seg in enumerate(self.segments):
            path = f"segments[{i}]"
            if abs(seg.start - expected) > 1e-12:
                raise ProfileError(
                    f"segment starts at {seg.start}, expected {expected} (gap or overlap)", field=f"{path}.from"
                )
            if not seg.end > seg.start:
                raise ProfileError("segment interval is empty", field=f"{path}.to")
            expected = seg.end
        if abs(expected - 1.0) > 1e-12:
            raise ProfileError(f"segments end at {expected}, expected 1", field=f"segments[{len(self.segments) - 1}].to")
        ys = np.linspace(0.0, 1.0, VALIDATION_SAMPLES)
        for i, seg in enumerate(self.segments):
            pts = np.concatenate([[seg.start, seg.end], ys[(ys > seg.start) & (ys < seg.end)]])
            for name in ("rho", "mu1", "mu2"):
                fn = getattr(seg, name)
                if fn.kind == "sampled" and (fn.ys[0] > seg.start + 1e-12 or fn.ys[-1] < seg.end - 1e-12):
                    raise ProfileError("sampled grid must cover the segment", field=f"segments[{i}].{name}")
                vals = fn(pts)
                if not np.all(np.isfinite(vals)):
                    raise ProfileError("coefficient is not finite", field=f"segments[{i}].{name}")
                if np.any(vals <= 0):
                    bad = pts[np.argmin(vals)]
                    raise ProfileError(
                        f"coefficient must be positive (min {vals.min():.6g} at y={bad:.6g})",
                        field=f"segments[{i}].{name}",
                    )

    # ---- queries -----------------------------------------------------------------
    @property
    def is_piecewise_constant(self) -> bool:
        return all(s.is_constant for s in self.segments)

    def pieces(self) -> list[tuple[float, float, int]]:
        """Smooth pieces ``(a, b, segment_index)``: segments split at sampled knots."""
        out = []
        for i, seg in enumerate(self.segments):
            pts = [seg.start, *seg.knots(), seg.end]
            out.extend((a, b, i) for a, b in zip(pts[:-1], pts[1:]))
        return out

    def segment_index(self, y) -> np.ndarray:
        """Index of the segment containing each ``y`` (taken modulo 1)."""
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        return np.clip(np.searchsorted(self._starts, y, side="right") - 1, 0, len(self.segments) - 1)

    def coefficients(self, y, segment: int | None = None):
        """Vectorised ``(rho, mu1, mu2)`` at ``y`` (periodically extended).

        If ``segment`` is given, that segment's formulas are used regardless of
        position, which lets callers take one-sided limits at segment ends.
        """
        y = np.asarray(y, dtype=float)
        if segment is not None:
            s = self.segments[segment]
            return s.rho(y), s.mu1(y), s.mu2(y)
        yy = np.mod(y, 1.0)
        idx = self.segment_index(yy)
        rho = np.empty(yy.shape)
        mu1 = np.empty(yy.shape)
        mu2 = np.empty(yy.shape)
        for i, s in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                rho[m], mu1[m], mu2[m] = s.rho(yy[m]), s.mu1(yy[m]), s.mu2(yy[m])
        return rho, mu1, mu2

    def is_midpoint_even(self, tol: float = 1e-12, samples: int = 401) -> bool:
        """True if all coefficients are even about ``y = 1/2`` (checked on open-interval samples)."""
        ys = (np.arange(samples) + 0.5) / samples
        a = self.coefficients(ys)
        b = self.coefficients(1.0 - ys)
        return all(np.allclose(u, v, rtol=tol, atol=0.0) for u, v in zip(a, b))


# --------------------------------------------------------------------------
# monoclinic reduction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonoclinicInput:
    """Piecewise monoclinic stiffness input on a single segment list.

    ``layers`` is a list of ``(start, end, c44, c45, c55, rho)`` tuples on the
    unit cell; every stiffness entry is a :data:`CoefficientFn` or a number.
    """

    layers: tuple

    def __init__(self, layers):
        object.__setattr__(self, "layers", tuple(tuple(l) for l in layers))


def _poly_of(fn: CoefficientFn):
    if fn.kind == "constant":
        return (float(fn.value),)
    if fn.kind == "polynomial":
        return fn.coefficients
    return None


def _reduced_mu2(c44: CoefficientFn, c45: CoefficientFn, c55: CoefficientFn, a: float, b: float) -> CoefficientFn:
    if c45.kind == "constant" and c45.value == 0.0:
        return c55
    p44, p45, p55 = _poly_of(c44), _poly_of(c45), _poly_of(c55)
    if p44 is not None and p45 is not None and p55 is not None:
        num = P.polysub(P.polymul(p55, p44), P.polymul(p45, p45))
        if len(p44) == 1:
            out = P.polymul(num, [1.0 / p44[0]])
            return Constant(float(out[0])) if len(np.trim_zeros(out, "b")) <= 1 else Polynomial(out)
        return Rational(num, p44)
    # at least one sampled input: evaluate on the union of knots
    knots = {a, b}
    for fn in (c44, c45, c55):
        if fn.kind == "sampled":
            knots.update(y for y in fn.ys if a <= y <= b)
    ys = np.array(sorted(knots))
    if ys.size < 16:
        ys = np.unique(np.concatenate([ys, np.linspace(a, b, 16)]))
    return Sampled(ys, c55(ys) - c45(ys) ** 2 / c44(ys))


def reduce_monoclinic(data: MonoclinicInput, period_scale: float = 1.0, name: str = "") -> MaterialProfile:
    """Reduce monoclinic stiffness to ``mu1 = c44`` and ``mu2 = c55 - c45**2/c44``.

    Raises
    ------
    DegenerateStiffness
        If ``c44*c55 - c45**2 <= 0`` (or ``c44 <= 0``) at any sampled point.
    """
    segs = []
    ys = np.linspace(0.0, 1.0, VALIDATION_SAMPLES)
    for i, (a, b, c44, c45, c55, rho) in enumerate(data.layers):
        c44, c45, c55, rho = (as_coefficient(c) for c in (c44, c45, c55, rho))
        pts = np.concatenate([[a, b], ys[(ys > a) & (ys < b)]])
        d44 = c44(pts)
        det = d44 * c55(pts) - c45(pts) ** 2
        if np.any(d44 <= 0) or np.any(det <= 0):
            raise DegenerateStiffness(
                f"c44*c55 - c45^2 must be positive (min {det.min():.6g})", field=f"segments[{i}].monoclinic"
            )
        segs.append(Segment(a, b, rho, c44, _reduced_mu2(c44, c45, c55, a, b)))
    return MaterialProfile(segs, period_scale=period_scale, name=name)


# --------------------------------------------------------------------------
# averages, extrema, point samples
# --------------------------------------------------------------------------

_AVERAGE_KEYS = {
    "rho": "rho",
    "ρ": "rho",
    "mu1": "mu1",
    "μ₁": "mu1",
    "mu2": "mu2",
    "μ₂": "mu2",
    "inv_mu1": "inv_mu1",
    "μ₁⁻¹": "inv_mu1",
}


def average(profile: MaterialProfile, which: str) -> float:
    """Period average of ``rho``, ``mu1``, ``mu2`` or ``inv_mu1`` (= 1/mu1).

    Constant and polynomial pieces are integrated exactly; reciprocals of
    linear interpolants use the exact logarithmic formula; other reciprocals
    use adaptive Gauss-Kronrod quadrature at ~1e-14 relative accuracy.
    """
    key = _AVERAGE_KEYS.get(which)
    if key is None:
        raise ValueError(f"unknown average {which!r}; use one of rho, mu1, mu2, inv_mu1")
    total = 0.0
    for seg in profile.segments:
        a, b = seg.start, seg.end
        if key != "inv_mu1":
            total += getattr(seg, key).integral(a, b)
            continue
        fn = seg.mu1
        if fn.kind == "constant":
            total += (b - a) / fn.value
        elif fn.kind == "sampled":
            total += fn.reciprocal_integral(a, b)
        else:
            val, _ = integrate.quad(lambda t: 1.0 / fn(t), a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
            total += val
    return float(total)


_EXPRESSIONS: dict[str, Callable] = {
    "mu2/rho": lambda r, m1, m2: m2 / r,
    "rho/mu2": lambda r, m1, m2: r / m2,
    "rho/mu1": lambda r, m1, m2: r / m1,
    "rho": lambda r, m1, m2: r,
    "mu1": lambda r, m1, m2: m1,
    "mu2": lambda r, m1, m2: m2,
    "rho*mu1": lambda r, m1, m2: r * m1,
}


def _critical_points(seg: Segment, expr: str) -> list[float]:
    """Closed-form critical points of ``expr`` on a polynomial/constant segment."""
    polys = {n: _poly_of(getattr(seg, n)) for n in ("rho", "mu1", "mu2")}
    if any(p is None for p in polys.values()):
        return []
    parts = {"mu2/rho": ("mu2", "rho"), "rho/mu2": ("rho", "mu2"), "rho/mu1": ("rho", "mu1")}
    if expr in parts:
        n, d = (polys[k] for k in parts[expr])
        # (n/d)' = 0  <=>  n' d - n d' = 0
        crit = P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))
    elif expr == "rho*mu1":
        crit = P.polyder(P.polymul(polys["rho"], polys["mu1"]))
    else:
        crit = P.polyder(polys[expr])
    crit = np.trim_zeros(np.atleast_1d(crit), "b")
    if crit.size <= 1:
        return []
    roots = P.polyroots(crit)
    real = roots[np.abs(roots.imag) < 1e-12].real
    return [float(r) for r in real if seg.start < r < seg.end]


def extremum(profile: MaterialProfile, expr: str, resolution: int = VALIDATION_SAMPLES) -> tuple[float, float]:
    """``(min, max)`` of a coefficient expression over the closed unit cell.

    ``expr`` is one of ``mu2/rho``, ``rho/mu2``, ``rho/mu1``, ``rho``, ``mu1``,
    ``mu2``, ``rho*mu1``.  Each segment is sampled on its closure (one-sided
    limits at the ends) plus the polynomial critical points.
    """
    key = expr.replace("μ₂", "mu2").replace("μ₁", "mu1").replace("ρ", "rho").replace(" ", "")
    fn = _EXPRESSIONS.get(key)
    if fn is None:
        raise ValueError(f"unknown expression {expr!r}")
    ys = np.linspace(0.0, 1.0, resolution)
    lo, hi = np.inf, -np.inf
    for i, seg in enumerate(profile.segments):
        pts = [seg.start, seg.end, *seg.knots(), *_critical_points(seg, key)]
        pts = np.concatenate([pts, ys[(ys > seg.start) & (ys < seg.end)]])
        vals = fn(*profile.coefficients(pts, segment=i))
        lo, hi = min(lo, float(vals.min())), max(hi, float(vals.max()))
    return lo, hi


def sample(profile: MaterialProfile, y: float) -> tuple[float, float, float]:
    """Point values ``(rho, mu1, mu2)`` at ``y in [0, 1)`` (right limit at segment joins)."""
    if not (0.0 <= y < 1.0):
        raise OutOfDomain(f"y={y} outside [0, 1)")
    rho, mu1, mu2 = profile.coefficients(np.array([y]))
    return float(rho[0]), float(mu1[0]), float(mu2[0])
