"""WKB approximation and the rigorous inequalities as predicates."""

import numpy as np
import pytest
from scipy.integrate import quad

from floquet1d import catalog
from floquet1d.asymptotics import (
    bound_growth_lower,
    bound_growth_upper,
    cutoff_bounds,
    first_edge_bounds,
    first_eig_bounds,
    impedance_jumps,
    wkb_delta,
)
from floquet1d.errors import MultipleJumps, NotSupersonic, PreconditionOutOfRegion
from floquet1d.lyapunov import delta


def _graded_wkb_reference(omega, k):
    """Closed-form jump ratio of the graded cell with the phase integral done by quad."""
    r = k * k / (omega * omega)
    jump = 12.0 * np.sqrt((1 - 4 * r) / (4 - r))
    g = catalog.cubic_graded()

    def integrand(y):
        rho, mu1, mu2 = (c[0] for c in g.coefficients(np.array([y])))
        return np.sqrt((rho * omega**2 - mu2 * k * k) / mu1)

    phase = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return 0.5 * (np.sqrt(jump) + 1 / np.sqrt(jump)) * np.cos(phase)


@pytest.mark.parametrize("omega, k", [(10.0, 0.0), (13.7, 2.0), (20.0, 2.0)])
def test_wkb_matches_closed_form_jump(omega, k):
    assert wkb_delta(catalog.cubic_graded(), omega, k) == pytest.approx(_graded_wkb_reference(omega, k), abs=1e-10)


def test_wkb_tracks_exact_delta_at_high_frequency():
    g = catalog.cubic_graded()
    for k in (0.0, 2.0):
        err = [abs(wkb_delta(g, w, k) - delta(g, w * w, k * k).delta.real) for w in np.linspace(10, 20, 41)]
        assert max(err) <= 0.05


def test_wkb_exact_for_homogeneous_and_matched_layers():
    h = catalog.homogeneous()
    assert wkb_delta(h, 5.0, 3.0) == pytest.approx(np.cos(4.0), abs=1e-12)
    m = catalog.impedance_matched_bilayer()
    assert impedance_jumps(m, 7.3, 0.0) == []
    assert wkb_delta(m, 7.3, 0.0) == pytest.approx(delta(m, 7.3**2, 0.0).delta.real, abs=1e-12)


def test_continuous_impedance_keeps_wkb_inside_unit_interval():
    m = catalog.impedance_matched_bilayer()
    assert all(abs(wkb_delta(m, w, 0.0)) <= 1.0 for w in np.linspace(1, 30, 50))


def test_wkb_preconditions():
    with pytest.raises(MultipleJumps):
        wkb_delta(catalog.contrast_bilayer(), 10.0, 0.0)
    with pytest.raises(NotSupersonic):
        wkb_delta(catalog.cubic_graded(), 1.0, 5.0)


def test_growth_bounds():
    g = catalog.cubic_graded()
    rng = np.random.default_rng(2)
    for _ in range(20):
        w2 = complex(rng.uniform(-30, 30), rng.uniform(-30, 30))
        k2 = complex(rng.uniform(-30, 30), rng.uniform(-30, 30))
        assert bound_growth_upper(g, w2, k2).satisfied
    assert bound_growth_lower(g, 1.0, 30.0).satisfied
    with pytest.raises(PreconditionOutOfRegion):
        bound_growth_lower(g, 10.0, 1.0)


def test_first_eigenvalue_bounds_and_equality_case():
    for K, k in ((0.3, 0.0), (1.0, 0.5), (np.pi, 2.0)):
        lo, hi = first_eig_bounds(catalog.cubic_graded(), K, k)
        assert lo.satisfied and hi.satisfied and hi.slack > 0
    _, hi = first_eig_bounds(catalog.homogeneous(), 1.0, 0.5)
    assert hi.satisfied and abs(hi.slack) < 1e-12


def test_cutoff_and_edge_brackets():
    for p in (catalog.cubic_graded(), catalog.contrast_bilayer()):
        centre, edge = cutoff_bounds(p, 1.0)
        assert centre.satisfied and edge.satisfied and edge.extra["ordered"]
        rep = first_edge_bounds(p, 2.0)
        assert rep.satisfied and rep.extra["lower"] <= rep.actual_value <= rep.extra["upper"]
