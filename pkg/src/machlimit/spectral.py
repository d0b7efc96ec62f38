"""Periodic Fourier fields on the 2pi-torus.

A field is stored as its full complex Fourier coefficient array, normalized so
that f(x) = sum_k c(k) exp(i k.x) with integer wavevectors k.  All
differentiation is exact per mode; nonlinear products go through physical
space and are dealiased with the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .errors import DimensionError, GridMismatchError, StateValidityError

HERMITIAN_TOL = 1e-13


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, 2pi)^dim.

    n must be even; wavenumbers are the integers in [-n/2, n/2) per axis.
    """

    dim: int
    n: int
    dealias_fraction: float = 2.0 / 3.0
    length: float = dc_field(default=2.0 * np.pi, repr=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DimensionError(f"dim must be 1, 2, or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be an even integer >= 8, got {self.n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def dx(self):
        return self.length / self.n

    @property
    def cell_volume(self):
        return self.dx**self.dim

    @property
    def volume(self):
        return self.length**self.dim

    def wavenumbers(self, axis):
        """Integer wavenumbers along one axis in FFT order."""
        return _axis_wavenumbers(self.n)

    def wavenumber_mesh(self):
        """Tuple of dim arrays of shape grid.shape with k_j per mode."""
        return _wavenumber_mesh(self.dim, self.n)

    def wavenumber_magnitude(self):
        k = self.wavenumber_mesh()
        return np.sqrt(sum(kj.astype(float) ** 2 for kj in k))

    @property
    def dealias_cutoff(self):
        return self.dealias_fraction * self.n / 2.0

    def dealias_mask(self):
        return _dealias_mask(self.dim, self.n, self.dealias_fraction)

    def coordinates(self):
        """Tuple of dim physical coordinate meshes (row-major 'ij' order)."""
        x = np.arange(self.n) * self.dx
        return np.meshgrid(*([x] * self.dim), indexing="ij")


@lru_cache(maxsize=None)
def _axis_wavenumbers(n):
    return np.fft.fftfreq(n, d=1.0 / n).astype(int)


@lru_cache(maxsize=None)
def _wavenumber_mesh(dim, n):
    k1 = _axis_wavenumbers(n)
    return tuple(np.meshgrid(*([k1] * dim), indexing="ij"))


@lru_cache(maxsize=None)
def _dealias_mask(dim, n, fraction):
    cutoff = fraction * n / 2.0
    mesh = _wavenumber_mesh(dim, n)
    mask = np.ones((n,) * dim, dtype=bool)
    for kj in mesh:
        mask &= np.abs(kj) <= cutoff
    return mask


@dataclass(frozen=True)
class SpectralField:
    """Real-valued periodic field stored as Fourier coefficients.

    Treated as an immutable value; operations return new fields.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def to_physical(self):
        return np.real(np.fft.ifftn(self.coeffs) * self.grid.n**self.grid.dim)

    def hermitian_defect(self):
        """max |c(-k) - conj(c(k))|; zero for a real-valued field."""
        flipped = _reverse_modes(self.coeffs)
        return float(np.max(np.abs(flipped - np.conj(self.coeffs))))

    def l2_norm(self):
        return float(
            np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2))
        )

    def mean(self):
        return float(np.real(self.coeffs[(0,) * self.grid.dim]))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.coeffs)))

    def __add__(self, other):
        _require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _require_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


def _reverse_modes(coeffs):
    """Coefficient array re-indexed k -> -k."""
    out = coeffs
    for axis in range(coeffs.ndim):
        out = np.flip(np.roll(out, -1, axis=axis), axis=axis)
    return out


def _require_same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")


def from_physical(grid, values):
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise GridMismatchError(
            f"physical array shape {values.shape} does not match grid {grid.shape}"
        )
    return SpectralField(grid, np.fft.fftn(values) / grid.n**grid.dim)


def from_function(grid, func):
    """Sample a callable of the coordinate meshes onto the grid."""
    return from_physical(grid, func(*grid.coordinates()))


def zero_field(grid):
    return SpectralField(grid, np.zeros(grid.shape, dtype=complex))


def constant_field(grid, value):
    coeffs = np.zeros(grid.shape, dtype=complex)
    coeffs[(0,) * grid.dim] = value
    return SpectralField(grid, coeffs)


def dealias(f):
    """Zero every mode with any |k_j| above the grid cutoff."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask(), f.coeffs, 0.0))


def partial_derivative(f, alpha):
    """Exact spectral derivative d^alpha f.

    alpha is a multi-index with one nonnegative entry per grid axis.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != f.grid.dim:
        raise DimensionError(
            f"multi-index {alpha} has {len(alpha)} entries for a {f.grid.dim}-d grid"
        )
    if any(a < 0 for a in alpha):
        raise DimensionError(f"multi-index entries must be >= 0, got {alpha}")
    coeffs = f.coeffs
    mesh = f.grid.wavenumber_mesh()
    for kj, aj in zip(mesh, alpha):
        if aj:
            coeffs = coeffs * (1j * kj) ** aj
    return SpectralField(f.grid, coeffs)


def l2_inner(f, g):
    """Parseval inner product <f, g> over the torus."""
    _require_same_grid(f, g)
    return float(
        f.grid.volume * np.real(np.sum(f.coeffs * np.conj(g.coeffs)))
    )


def pointwise_product(f, g):
    """Dealiased physical-space product fg."""
    _require_same_grid(f, g)
    return dealias(from_physical(f.grid, f.to_physical() * g.to_physical()))


def pointwise_apply(func, *fields):
    """Apply a pointwise scalar function to physical values, dealiased."""
    grid = fields[0].grid
    for f in fields[1:]:
        _require_same_grid(fields[0], f)
    return dealias(from_physical(grid, func(*(f.to_physical() for f in fields))))


def require_positive(f, what="coefficient"):
    """Check strict positivity on the physical grid; returns min value."""
    values = f.to_physical()
    lo = float(np.min(values))
    if not np.isfinite(lo) or lo <= 0.0:
        raise StateValidityError(f"{what} must be strictly positive, min = {lo}")
    return lo


# vector-calculus helpers used by the gas dynamics and solver modules

def gradient(f):
    return [partial_derivative(f, _unit(f.grid.dim, j)) for j in range(f.grid.dim)]


def divergence(v):
    grid = v[0].grid
    if len(v) != grid.dim:
        raise DimensionError(f"expected {grid.dim} components, got {len(v)}")
    total = zero_field(grid)
    for j, comp in enumerate(v):
        total = total + partial_derivative(comp, _unit(grid.dim, j))
    return total


def curl(v):
    """Scalar curl in 2D, three-component curl in 3D."""
    grid = v[0].grid
    if grid.dim == 2:
        return partial_derivative(v[1], (1, 0)) - partial_derivative(v[0], (0, 1))
    if grid.dim == 3:
        d = lambda f, j: partial_derivative(f, _unit(3, j))
        return [
            d(v[2], 1) - d(v[1], 2),
            d(v[0], 2) - d(v[2], 0),
            d(v[1], 0) - d(v[0], 1),
        ]
    raise DimensionError("curl requires dim 2 or 3")


def advect(v, f):
    """Dealiased v . grad f."""
    grid = f.grid
    total = zero_field(grid)
    for j in range(grid.dim):
        total = total + pointwise_product(v[j], partial_derivative(f, _unit(grid.dim, j)))
    return total


def _unit(dim, j):
    e = [0] * dim
    e[j] = 1
    return tuple(e)
