"""Isofrequency branches K_j(k), edge behaviour, convexity and the truncated layer series."""

import numpy as np
import pytest

from floquet1d import catalog
from floquet1d.errors import NotPiecewiseConstant
from floquet1d.isofreq import (
    EdgeBehavior,
    convexity_certificate,
    dK_dk,
    first_cutoff_pi,
    iso_branches,
    truncated_delta_polynomial,
    truncated_series_isofreq,
)
from floquet1d.lyapunov import delta
from floquet1d.profile import average, extremum


def test_homogeneous_branch_is_a_quarter_circle():
    (b,) = iso_branches(catalog.homogeneous(), 2.0)
    assert b.closed and b.edges[0][1] == 0
    assert b.edges[0][0] == pytest.approx(2.0, abs=1e-10)
    assert np.allclose(b.K**2 + b.k**2, 4.0, atol=1e-9)


def test_homogeneous_slopes_closed_form():
    h = catalog.homogeneous()
    assert dK_dk(h, 2.0, 1.0) == pytest.approx(-1.0 / np.sqrt(3.0), rel=1e-9)
    origin = dK_dk(h, 2.0, 0.0)
    assert isinstance(origin, EdgeBehavior) and origin.case == "origin"
    assert origin.d2K_dk2 == pytest.approx(-0.5, rel=1e-8)
    edge = dK_dk(h, 2.0, 2.0)
    assert edge.case == "vertical" and edge.d2k_dK2 == pytest.approx(-0.5, rel=1e-6)


def test_branch_points_satisfy_the_dispersion_relation():
    g = catalog.cubic_graded()
    for b in iso_branches(g, 8.0):
        for k, K in b.points[:: max(1, len(b.points) // 10)]:
            assert delta(g, 64.0, k * k).delta.real == pytest.approx(np.cos(K), abs=1e-8)


def test_three_branches_at_omega_eight():
    bs = iso_branches(catalog.cubic_graded(), 8.0)
    assert [b.j for b in bs] == [1, 2, 3]
    assert not any(b.zws_edges for b in bs)
    assert bs[1].edges[0][1] == 0 and bs[1].edges[1][1] == 1


def test_interior_slope_matches_finite_difference():
    g = catalog.cubic_graded()
    w, k, h = 8.0, 1.0, 1e-5
    K = lambda kk: np.arccos(delta(g, w * w, kk * kk).delta.real)  # noqa: E731
    assert dK_dk(g, w, k) == pytest.approx((K(k + h) - K(k - h)) / (2 * h), rel=1e-6)


def test_convexity_below_first_cutoff():
    g = catalog.cubic_graded()
    w = 0.8 * first_cutoff_pi(g)
    c = convexity_certificate(g, w)
    assert c.passed and c.min_h > 0 and c.derivatives_positive
    lo, k10, hi = c.bounds
    assert lo <= k10 <= hi and c.bounds_ok
    assert lo == pytest.approx(w * np.sqrt(average(g, "rho") / average(g, "mu2")))
    assert hi == pytest.approx(w * np.sqrt(extremum(g, "rho/mu2")[1]))


def test_truncated_series_converges_to_exact_edge():
    p = catalog.contrast_bilayer()
    w = 0.9 * first_cutoff_pi(p)
    exact = convexity_certificate(p, w).k10
    assert truncated_series_isofreq(p, w, 20).convexity.k10 == pytest.approx(exact, rel=1e-12)


def test_truncated_series_spurious_concavity():
    p = catalog.contrast_bilayer()
    w = 0.9 * first_cutoff_pi(p)
    assert convexity_certificate(p, w).passed
    assert not truncated_series_isofreq(p, w, 3).convexity.passed


def test_truncated_polynomial_constant_term_matches_k_zero():
    p = catalog.contrast_bilayer()
    coef = truncated_delta_polynomial(p, 1.5, 30)
    assert coef[0] == pytest.approx(delta(p, 2.25, 0.0).delta.real, abs=1e-12)


def test_truncated_series_needs_layers():
    with pytest.raises(NotPiecewiseConstant):
        truncated_delta_polynomial(catalog.cubic_graded(), 1.0, 5)
