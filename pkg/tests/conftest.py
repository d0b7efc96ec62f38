import numpy as np
import pytest

from machlimit.gas import GasModel
from machlimit.spectral import Grid, SpectralField, from_physical


@pytest.fixture(scope="session")
def grid32():
    return Grid(dim=2, n=32)


@pytest.fixture(scope="session")
def grid64():
    return Grid(dim=2, n=64)


@pytest.fixture(scope="session")
def model():
    return GasModel.ideal()


def band_limited(grid, rng, band=5, amplitude=1.0, zero_mean=True):
    """Random real field confined to |k_j| <= band."""
    f = from_physical(grid, rng.standard_normal(grid.shape))
    mask = np.ones(grid.shape, dtype=bool)
    for kj in grid.wavenumber_mesh():
        mask &= np.abs(kj) <= band
    coeffs = np.where(mask, f.coeffs, 0.0)
    if zero_mean:
        coeffs[(0,) * grid.dim] = 0.0
    out = SpectralField(grid, coeffs)
    return (amplitude / max(out.l2_norm(), 1e-300)) * out
