"""Lyapunov function: values, classification, Floquet K, three derivative routes."""

import numpy as np
import pytest

from floquet1d import catalog
from floquet1d.errors import NotInPassband
from floquet1d.lyapunov import (
    Classification,
    classify,
    d2_delta,
    d2_delta_all,
    d2_delta_fd,
    d2_delta_square_form,
    d_delta_eigen,
    d_delta_fd,
    d_delta_integral,
    delta,
    delta_small,
    delta_values,
    floquet_K,
)
from floquet1d.profile import average

INV_MU1_GRADED = 0.6 + 0.16 * np.log(3.0 / 8.0)
# DOP853 oracle (rtol 1e-13) for the graded cell at omega = 2, k = 1
GRADED_DELTA_W2_K1 = 0.019368996434346447


def test_origin_is_flagged():
    s = delta(catalog.cubic_graded(), 0.0, 0.0)
    assert s.delta == pytest.approx(1.0, abs=1e-15)
    assert s.classification is Classification.CUTOFF_PLUS and s.origin


def test_closed_form_values():
    h = catalog.homogeneous()
    s = delta(h, np.pi**2, 0.0)
    assert s.delta.real == pytest.approx(-1.0, abs=1e-12)
    assert s.classification is Classification.CUTOFF_MINUS
    s = delta(h, 0.0, 1.0)
    assert s.delta.real == pytest.approx(np.cosh(1.0), abs=1e-13)
    assert s.classification is Classification.STOPBAND


def test_graded_value_against_ode_oracle():
    assert delta(catalog.cubic_graded(), 4.0, 1.0).delta.real == pytest.approx(GRADED_DELTA_W2_K1, abs=1e-11)


def test_floquet_K_strip():
    assert floquet_K(1.0) == 0
    assert floquet_K(0.0) == pytest.approx(np.pi / 2)
    assert floquet_K(-1.0) == pytest.approx(np.pi)
    assert floquet_K(2.0) == pytest.approx(1j * np.arccosh(2.0))
    assert floquet_K(-1.5) == pytest.approx(np.pi + 1j * np.arccosh(1.5))
    K = floquet_K(0.3 + 0.8j)
    assert K.imag >= 0 and np.cos(K) == pytest.approx(0.3 + 0.8j)


def test_classification_band():
    assert classify(1.0 + 5e-10) is Classification.CUTOFF_PLUS
    assert classify(1.0 + 5e-9) is Classification.STOPBAND
    assert classify(0.99) is Classification.PASSBAND


def test_small_argument_expansion():
    h = catalog.homogeneous()
    assert delta_small(h, 0.0, 0.0) == 1.0
    assert abs(delta_small(h, 0.01, 0.0) - np.cos(0.1)) == pytest.approx(4.2e-6, rel=0.02)
    g = catalog.cubic_graded()
    w2 = 1e-4
    slope = (delta(g, w2, 0.0).delta.real - 1.0) / w2
    assert slope == pytest.approx(-0.5 * 2.5 * INV_MU1_GRADED, rel=1e-3)


def test_realness_on_real_grid():
    g = catalog.cubic_graded()
    W, Kk = np.meshgrid(np.linspace(0, 400, 30), np.linspace(0, 100, 30))
    assert np.max(np.abs(delta_values(g, W, Kk).imag)) <= 1e-9


def test_complex_frequency_never_in_the_passband_segment():
    g = catalog.cubic_graded()
    rng = np.random.default_rng(5)
    w2 = rng.uniform(-20, 200, 100) + 0.5j
    k2 = rng.uniform(0, 20, 100)
    d = delta_values(g, w2, k2)
    dist = np.where(np.abs(d.real) <= 1, np.abs(d.imag), np.hypot(np.abs(d.real) - 1, d.imag))
    assert np.all(dist > 0)


def test_origin_derivatives_closed_form():
    g = catalog.cubic_graded()
    b = d_delta_integral(g, 0.0, 0.0)
    assert b.d_dw2.real == pytest.approx(-0.5 * 2.5 * INV_MU1_GRADED, rel=1e-8)
    assert b.d_dk2.real == pytest.approx(0.5 * INV_MU1_GRADED * average(g, "mu2"), rel=1e-8)


def test_homogeneous_derivative_closed_form():
    b = d_delta_integral(catalog.homogeneous(), 1.0, 0.0)
    assert b.d_dw2.real == pytest.approx(-np.sin(1.0) / 2, abs=1e-12)


def test_integral_vs_finite_difference():
    g = catalog.cubic_graded()
    a = d_delta_integral(g, 4.0, 1.0)
    f = d_delta_fd(g, 4.0, 1.0)
    assert a.d_dw2.real == pytest.approx(f.d_dw2.real, rel=1e-6)
    assert a.d_dk2.real == pytest.approx(f.d_dk2.real, rel=1e-6)


def test_eigen_route_agrees_in_passband():
    g = catalog.cubic_graded()
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 15:
        w, k = rng.uniform(0.5, 15.0), rng.uniform(0.0, 2.0)
        if abs(delta(g, w * w, k * k).delta.real) >= 0.98:
            continue
        a = d_delta_integral(g, w * w, k * k)
        e = d_delta_eigen(g, w * w, k * k)
        assert e.d_dw2.real == pytest.approx(a.d_dw2.real, rel=1e-6)
        assert e.d_dk2.real == pytest.approx(a.d_dk2.real, rel=1e-6)
        checked += 1


def test_eigen_route_rejects_stopband():
    with pytest.raises(NotInPassband):
        d_delta_eigen(catalog.cubic_graded(), 100.0, 0.0)


def test_eigen_route_at_a_regular_cutoff():
    from floquet1d.spectrum import band_edges

    p = catalog.contrast_bilayer()
    edge = band_edges(p, 0.0, 5.0)[1]
    e = d_delta_eigen(p, edge.omega**2, 0.0)
    a = d_delta_integral(p, edge.omega**2, 0.0)
    assert e.d_dw2.real == pytest.approx(a.d_dw2.real, rel=1e-6)


def test_sign_pattern_in_open_passbands():
    from floquet1d.spectrum import branch_omega

    g = catalog.cubic_graded()
    for n in (1, 2, 3):
        w = branch_omega(g, np.pi / 2, 1.0, n).omega
        b = d_delta_integral(g, w * w, 1.0)
        assert np.sign(b.d_dw2.real) == (-1) ** n
        assert np.sign(b.d_dk2.real) == -((-1) ** n)


def test_second_derivatives_homogeneous_closed_form():
    x = 2.0
    ref = -np.cos(np.sqrt(x)) / (4 * x) + np.sin(np.sqrt(x)) / (4 * x**1.5)
    assert d2_delta(catalog.homogeneous(), x, 0.0, which="w2w2").real == pytest.approx(ref, rel=1e-8)


def test_second_derivatives_vs_finite_differences():
    g = catalog.cubic_graded()
    d2 = d2_delta_all(g, 9.0, 1.5)
    fd = d2_delta_fd(g, 9.0, 1.5)
    for key in ("w2w2", "k2k2", "w2k2"):
        assert d2[key].real == pytest.approx(fd[key].real, rel=1e-4)


def test_square_form_consistency():
    g = catalog.cubic_graded()
    a = d2_delta(g, 9.0, 1.5, which="w2w2").real
    b = d2_delta_square_form(g, 9.0, 1.5, n=400).real
    assert b == pytest.approx(a, rel=1e-3)


def test_second_derivative_sign_at_a_zero_width_stopband():
    from floquet1d.spectrum import detect_zws

    p = catalog.contrast_bilayer()
    rep = detect_zws(p, 6.3313, 2.5392)
    assert rep.confirmed
    w = rep.omega
    m = 0 if rep.sign == 1 else 1
    d_ww = 4 * w * w * d2_delta(p, w * w, rep.k**2, which="w2w2").real
    assert (-1) ** (m + 1) * d_ww > 0
