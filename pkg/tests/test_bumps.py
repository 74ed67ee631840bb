import numpy as np

from qel.bumps import chi, glue, plateau, psi, radial_near_weight
from qel.initial_data import cutoff


def test_glue_endpoints_and_monotone():
    assert glue(-1.0) == 0.0 and glue(0.0) == 0.0
    assert glue(1.0) == 1.0 and glue(2.0) == 1.0
    t = np.linspace(0.03, 0.97, 400)
    assert np.all(np.diff(glue(t)) > 0)


def test_psi_plateau_and_support():
    s = np.linspace(-1.0, 1.0, 21)
    assert np.all(psi(s) == 1.0)
    assert psi(2.0) == 0.0 and psi(-2.5) == 0.0
    assert 0.0 < psi(1.5) < 1.0


def test_chi_plateau_and_support():
    assert chi(0.0) == 1.0 and chi(2.0) == 1.0
    assert chi(4.0) == 0.0 and chi(5.0) == 0.0
    s = np.linspace(2.1, 3.9, 300)
    assert np.all(np.diff(chi(s)) < 0)  # strictly decreasing on the transition


def test_cutoff_tensor_values():
    lam = 0.1
    assert cutoff(0.0, 0.0, lam) == 1.0
    assert cutoff(5 * lam, 0.0, lam) == 0.0
    v = cutoff(3 * lam, 0.0, lam)
    assert 0.0 < v < 1.0
    # decreasing in |x| along the transition
    xs = np.linspace(2.1 * lam, 3.9 * lam, 200)
    vals = cutoff(xs, np.zeros_like(xs), lam)
    assert np.all(np.diff(vals) < 0)


def test_radial_near_weight():
    assert radial_near_weight(0.0, 1.0) == 1.0
    assert radial_near_weight(0.99, 1.0) == 1.0
    assert radial_near_weight(2.01, 1.0) == 0.0
    assert 0.0 < radial_near_weight(1.5, 1.0) < 1.0


def test_plateau_even():
    s = np.linspace(0, 4, 50)
    assert np.allclose(plateau(s, 1, 2), plateau(-s, 1, 2))
