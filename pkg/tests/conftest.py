import numpy as np
import pytest

from qel.fields import MeridionalGrid, ScalarField


def truncated_gaussian_mms(n, w=0.11, rc=1.0, half=0.75):
    """Manufactured elliptic solution: phi = exp(-rho^2/w^2), source cut where
    it falls below double-precision noise so the sampled field is compact."""
    from qel.bumps import plateau

    grid = MeridionalGrid(rc - half, rc + half, -half, half, n, n)
    rr, zz = grid.mesh()
    q2 = ((rr - rc) ** 2 + zz**2) / w**2
    phi = np.exp(-q2)
    lap = phi * (4.0 * q2 / w**2 - 4.0 / w**2 - (3.0 / rr) * 2.0 * (rr - rc) / w**2)
    cut = plateau(np.sqrt(q2), 5.0, 5.9)
    return grid, ScalarField(grid, -lap * cut), phi


def model_packet_fields(grid, r_star, a=1.0, gamma_star=1.0, b=1.0):
    """Global polynomial model fields (no cutoff): G = a x y,
    Gamma = gamma_star + b/2 x y^2 in local coordinates x = r_* - r."""
    rr, zz = grid.mesh()
    x = r_star - rr
    return (ScalarField(grid, a * x * zz),
            ScalarField(grid, gamma_star + 0.5 * b * x * zz**2))


@pytest.fixture(scope="session")
def unit_grid():
    return MeridionalGrid(0.5, 1.5, -0.5, 0.5, 65, 65)
