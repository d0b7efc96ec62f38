"""Fourier field layer: exactness of the linear operations."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from machlimit.errors import DimensionError, GridMismatchError, StateValidityError
from machlimit.spectral import (
    Grid,
    SpectralField,
    advect,
    constant_field,
    curl,
    dealias,
    divergence,
    from_function,
    from_physical,
    gradient,
    l2_inner,
    partial_derivative,
    pointwise_product,
    require_positive,
    zero_field,
)

from conftest import band_limited


def test_round_trip(grid32):
    rng = np.random.default_rng(0)
    values = rng.standard_normal(grid32.shape)
    f = from_physical(grid32, values)
    assert np.max(np.abs(f.to_physical() - values)) < 1e-12


def test_grid_validation():
    with pytest.raises(DimensionError):
        Grid(dim=4, n=16)
    with pytest.raises(ValueError):
        Grid(dim=2, n=15)


def test_grid_mismatch(grid32, grid64):
    with pytest.raises(GridMismatchError):
        zero_field(grid32) + zero_field(grid64)


def test_single_mode_l2_norm(grid32):
    # ||cos x1||^2 over [0, 2pi]^2 is 2 pi^2
    f = from_function(grid32, lambda x, y: np.cos(x))
    assert abs(f.l2_norm() - np.sqrt(2 * np.pi**2)) < 1e-12
    assert abs(l2_inner(f, f) - 2 * np.pi**2) < 1e-12


def test_derivative_single_mode(grid32):
    f = from_function(grid32, lambda x, y: np.sin(3 * x) * np.cos(2 * y))
    df = partial_derivative(f, (1, 0))
    expect = from_function(grid32, lambda x, y: 3 * np.cos(3 * x) * np.cos(2 * y))
    assert (df - expect).l2_norm() < 1e-11


def test_derivatives_commute(grid32):
    rng = np.random.default_rng(1)
    f = band_limited(grid32, rng)
    a = partial_derivative(partial_derivative(f, (1, 0)), (0, 2))
    b = partial_derivative(f, (1, 2))
    assert np.array_equal(a.coeffs, b.coeffs)


def test_integration_by_parts(grid32):
    rng = np.random.default_rng(2)
    f, g = band_limited(grid32, rng), band_limited(grid32, rng)
    lhs = l2_inner(partial_derivative(f, (1, 0)), g)
    rhs = -l2_inner(f, partial_derivative(g, (1, 0)))
    assert abs(lhs - rhs) < 1e-12


def test_parseval_against_quadrature(grid32):
    rng = np.random.default_rng(3)
    f, g = band_limited(grid32, rng), band_limited(grid32, rng)
    spectral = l2_inner(f, g)
    quad = np.sum(f.to_physical() * g.to_physical()) * grid32.cell_volume
    assert abs(spectral - quad) / max(abs(spectral), 1.0) < 1e-12


def test_dealias_band_limited_unchanged(grid32):
    rng = np.random.default_rng(4)
    f = band_limited(grid32, rng, band=int(grid32.dealias_cutoff) - 1)
    assert np.array_equal(dealias(f).coeffs, f.coeffs)


def test_dealias_kills_high_mode(grid32):
    k_high = int(grid32.dealias_cutoff) + 1
    f = from_function(grid32, lambda x, y: np.cos(k_high * x))
    assert dealias(f).l2_norm() < 1e-12


def test_hermitian_preserved_by_product(grid32):
    rng = np.random.default_rng(5)
    f, g = band_limited(grid32, rng), band_limited(grid32, rng)
    assert pointwise_product(f, g).hermitian_defect() < 1e-13
    assert partial_derivative(f, (2, 1)).hermitian_defect() < 1e-13


def test_div_of_curl_and_curl_of_grad(grid32):
    rng = np.random.default_rng(6)
    f = band_limited(grid32, rng)
    assert curl(gradient(f)).l2_norm() < 1e-12
    g3 = Grid(dim=3, n=16)
    v = [band_limited(g3, rng, band=4) for _ in range(3)]
    assert divergence(curl(v)).l2_norm() < 1e-11


def test_advect_constant_is_zero(grid32):
    rng = np.random.default_rng(7)
    v = [band_limited(grid32, rng) for _ in range(2)]
    c = constant_field(grid32, 3.0)
    assert advect(v, c).l2_norm() == 0.0


def test_product_exact_when_resolved(grid32):
    # bands 3 and 4 stay below the cutoff, so the product is exact
    f = from_function(grid32, lambda x, y: np.cos(3 * x))
    g = from_function(grid32, lambda x, y: np.sin(4 * y))
    h = pointwise_product(f, g)
    expect = from_function(grid32, lambda x, y: np.cos(3 * x) * np.sin(4 * y))
    assert (h - expect).l2_norm() < 1e-12


def test_require_positive(grid32):
    f = constant_field(grid32, 2.0)
    assert require_positive(f) == pytest.approx(2.0)
    with pytest.raises(StateValidityError):
        require_positive(constant_field(grid32, -1.0))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 10.0))
def test_linearity_and_hermitian(seed, scale):
    grid = Grid(dim=2, n=16)
    rng = np.random.default_rng(seed)
    f = band_limited(grid, rng, band=4)
    g = band_limited(grid, rng, band=4)
    assert (scale * (f + g) - (scale * f + scale * g)).l2_norm() < 1e-11
    assert (f + g).hermitian_defect() < 1e-13
