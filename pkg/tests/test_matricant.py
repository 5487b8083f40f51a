"""Matricant: slab matrix, product integration, monodromy, closed-form bilayer, m-functions."""

import numpy as np
import pytest

from floquet1d import catalog
from floquet1d.errors import OutOfDomain, ToleranceNotReached
from floquet1d.matricant import (
    MatricantTable,
    QuadratureConfig,
    bilayer_monodromy,
    expm_traceless,
    m_functions,
    monodromy,
    propagate,
    q_matrix,
)
from floquet1d.profile import MaterialProfile, Polynomial, Segment, average

# Oracle: DOP853 integration of the first-order system (rtol 1e-13) for the
# graded cell at omega = 2, k = 0.
GRADED_M_W2 = np.array(
    [[0.20636529415970584, -0.24242374429592714j], [-5.371946180738775j, -1.464816593903254]]
)
# Oracle: product of scipy.linalg.expm of the two constant layer matrices.
CONTRAST_M_W1 = np.array(
    [[0.8395253561211348, -0.5057846775209679j], [-1.3409730615474624j, 0.38325986243884896]]
)
SOFT_M_W68_K2 = np.array(
    [[-1.003676713903229, -0.13195134223706287j], [-0.9706284772979222j, -0.8687301972127757]]
)


def test_q_matrix_examples():
    h = catalog.homogeneous()
    assert np.allclose(q_matrix(h, 0.3, 1.0, 0.0), 1j * np.array([[0, -1], [-1, 0]]))
    g = catalog.cubic_graded()
    assert np.allclose(q_matrix(g, 0.0, 0.0, 0.0), 1j * np.array([[0, -2.0], [0, 0]]))
    s = catalog.soft_bilayer()
    assert np.allclose(q_matrix(s, 0.25, 1.0, 1.0), 1j * np.array([[0, -1.0], [0.35 - 0.2, 0]]))
    assert np.trace(q_matrix(g, 0.7, 3.0, 2.0)) == 0
    with pytest.raises(OutOfDomain):
        q_matrix(g, 1.2, 1.0, 1.0)


def test_exponential_of_traceless_matrix():
    A = np.array([[0.3, 1.2 - 0.4j], [-0.7j, -0.3]])
    from scipy.linalg import expm

    assert np.allclose(expm_traceless(A), expm(A), atol=1e-14)
    tiny = 1e-9 * A
    assert np.allclose(expm_traceless(tiny), np.eye(2) + tiny, atol=1e-17)


def test_static_limit_is_nilpotent():
    g = catalog.cubic_graded()
    y = 0.6
    M = propagate(g, 0.0, y, 0.0, 0.0).matrix
    from scipy.integrate import quad

    integral = quad(lambda s: 1.0 / g.coefficients(np.array([s]))[1][0], 0.0, y, epsabs=1e-15)[0]
    assert np.allclose(M, [[1, -1j * integral], [0, 1]], atol=1e-13)


def test_homogeneous_closed_form():
    for w in (0.5, 1.0, 3.7):
        M = propagate(catalog.homogeneous(), 0.0, 1.0, w * w, 0.0).matrix
        ref = np.array([[np.cos(w), -1j * np.sin(w) / w], [-1j * w * np.sin(w), np.cos(w)]])
        assert np.allclose(M, ref, atol=1e-13)


def test_graded_against_ode_oracle():
    M = propagate(catalog.cubic_graded(), 0.0, 1.0, 4.0, 0.0).matrix
    assert np.max(np.abs(M - GRADED_M_W2)) < 1e-10


def test_midpoint_scheme_converges_to_same_matrix():
    cfg = QuadratureConfig(rel_tol=1e-9, abs_tol=1e-10, scheme="midpoint-frozen")
    M = propagate(catalog.cubic_graded(), 0.0, 1.0, 4.0, 0.0, cfg).matrix
    assert np.max(np.abs(M - GRADED_M_W2)) < 1e-7


def test_strict_mode_raises_when_budget_exhausted():
    cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-15, max_subdivision=8, strict=True)
    with pytest.raises(ToleranceNotReached):
        propagate(catalog.cubic_graded(), 0.0, 1.0, 400.0, 1.0, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivision=4)
    with pytest.raises(ValueError):
        QuadratureConfig(scheme="rk4")


def test_bilayer_closed_form_against_expm_oracle():
    M = bilayer_monodromy((1.0, 1.0, 1.0, 0.5), (2.0, 12.0, 12.0, 0.5), 1.0, 0.0).matrix
    assert np.max(np.abs(M - CONTRAST_M_W1)) < 1e-13
    M = bilayer_monodromy((0.2, 1.0, 0.35, 0.5), (0.19, 0.95, 0.4, 0.5), 6.8, 2.0).matrix
    assert np.max(np.abs(M - SOFT_M_W68_K2)) < 1e-13


def test_bilayer_closed_form_vs_product_integrator():
    for prof, layers in (
        (catalog.contrast_bilayer(), ((1.0, 1.0, 1.0, 0.5), (2.0, 12.0, 12.0, 0.5))),
        (catalog.soft_bilayer(), ((0.2, 1.0, 0.35, 0.5), (0.19, 0.95, 0.4, 0.5))),
    ):
        for w, k in ((3.4, 1.0), (0.7, 2.5), (9.0, 0.3)):
            a = bilayer_monodromy(*layers, w, k).matrix
            b = monodromy(prof, 0.0, w * w, k * k).matrix
            assert np.max(np.abs(a - b)) <= 1e-9


def test_identical_layers_collapse_to_homogeneous():
    w = 2.3
    M = bilayer_monodromy((1.0, 1.0, 1.0, 0.3), (1.0, 1.0, 1.0, 0.7), w, 0.0).matrix
    assert np.allclose(M, propagate(catalog.homogeneous(), 0.0, 1.0, w * w, 0.0).matrix, atol=1e-14)


def test_monodromy_paths_and_trace_invariance():
    p = catalog.contrast_bilayer()
    traces = []
    for y0 in (0.0, 0.3, 0.7):
        a = monodromy(p, y0, 5.0, 1.0, path="direct").matrix
        b = monodromy(p, y0, 5.0, 1.0, path="similarity").matrix
        assert np.max(np.abs(a - b)) < 1e-9
        traces.append(np.trace(a))
    assert np.ptp(np.real(traces)) < 1e-10


def test_composition_law():
    g = catalog.cubic_graded()
    rng = np.random.default_rng(3)
    for s in rng.uniform(0.05, 0.95, 4):
        whole = propagate(g, 0.0, 1.0, 7.0, 2.0).matrix
        split = propagate(g, s, 1.0, 7.0, 2.0).matrix @ propagate(g, 0.0, s, 7.0, 2.0).matrix
        assert np.max(np.abs(whole - split)) < 1e-9


def test_determinant_and_structure_random_profiles():
    rng = np.random.default_rng(11)
    for _ in range(20):
        coeffs = [Polynomial(rng.uniform(0.5, 2.0, 1).tolist() + rng.uniform(0.0, 0.5, 2).tolist()) for _ in range(3)]
        p = MaterialProfile([Segment(0.0, 1.0, *coeffs)])
        w2, k2 = rng.uniform(-25, 25, 2)
        M = monodromy(p, 0.0, w2, k2)
        assert abs(M.det - 1.0) <= 1e-10
        assert M.structure_residual() <= 1e-9


def test_symmetric_profile_has_equal_diagonal():
    M = monodromy(catalog.symmetric_trilayer(), 0.0, 6.0, 1.5).matrix
    assert abs(M[0, 0] - M[1, 1]) < 1e-9


def test_m_functions_in_a_passband():
    g = catalog.cubic_graded()
    M = monodromy(g, 0.0, 4.0, 0.0).matrix
    assert abs(0.5 * np.trace(M).real) < 1.0
    grid = np.linspace(0.0, 1.0, 201)
    rows = m_functions(g, 4.0, 0.0, grid)
    m2 = np.array([r.m2 for r in rows])
    m3 = np.array([r.m3 for r in rows])
    assert np.all(m2 > 0) or np.all(m2 < 0)
    assert np.all(m2 * m3 > 0)
    assert max(abs(r.det - 1.0) for r in rows) < 1e-10
    assert np.ptp([r.m1 + r.m4 for r in rows]) < 1e-10


def test_m2_derivative_identity():
    g = catalog.cubic_graded()
    grid = np.linspace(0.2, 0.8, 601)
    rows = m_functions(g, 4.0, 1.0, grid)
    m1, m2, m4 = (np.array([getattr(r, a) for r in rows]) for a in ("m1", "m2", "m4"))
    h = grid[1] - grid[0]
    fd = (m2[2:] - m2[:-2]) / (2 * h)
    _, mu1, _ = g.coefficients(grid[1:-1])
    assert np.max(np.abs(fd - (m1 - m4)[1:-1] / mu1)) < 1e-4


def test_table_matches_direct_propagation():
    g = catalog.cubic_graded()
    tab = MatricantTable(g, 12.0, 1.0)
    for y in (0.13, 0.5, 0.999, 1.0, 1.4):
        direct = propagate(g, 0.0, y, 12.0, 1.0).matrix
        assert np.max(np.abs(tab.at(np.array(y)) - direct)) < 1e-10
    assert abs(tab.delta - 0.5 * np.trace(monodromy(g, 0.0, 12.0, 1.0).matrix)) < 1e-11


def test_static_matricant_uses_harmonic_mean():
    g = catalog.cubic_graded()
    M = propagate(g, 0.0, 1.0, 0.0, 0.0).matrix
    assert M[0, 1] == pytest.approx(-1j * average(g, "inv_mu1"), abs=1e-13)
