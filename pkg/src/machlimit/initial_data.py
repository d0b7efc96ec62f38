"""Random analytic/Gevrey initial data and the limit velocity w0.

Generated fields have shell amplitudes amplitude * (|k|/peak)^2 * exp(-tau0 *
|k|^(1/s)) with uniformly random Hermitian phases, so the planted analyticity
radius tau0 can be recovered from the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResolutionError
from .gas import FlowState, r0_field
from .solvers import EllipticConfig, elliptic_solve_variable, variable_density_projection
from .spectral import (
    SpectralField,
    constant_field,
    divergence,
    gradient,
    pointwise_apply,
    pointwise_product,
    zero_field,
)

PREPARED_KINDS = ("well", "general")

# spectrum must drop by at least this factor from its peak before the cutoff
RESOLUTION_DECAY_FACTOR = 1e3


@dataclass(frozen=True)
class DataSpec:
    seed: int
    tau0: float
    s: float = 1.0
    amplitude: float = 0.3
    peak_shell: int = 2
    prepared: str = "well"

    def __post_init__(self):
        if self.tau0 <= 0.0:
            raise ValueError("tau0 must be positive")
        if self.s < 1.0:
            raise ValueError("Gevrey index s must be >= 1")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.peak_shell < 1:
            raise ValueError("peak_shell must be >= 1")
        if self.prepared not in PREPARED_KINDS:
            raise ValueError(f"prepared must be one of {PREPARED_KINDS}")

    def to_config(self):
        return {
            "seed": self.seed,
            "tau0": self.tau0,
            "s": self.s,
            "amplitude": self.amplitude,
            "peak_shell": self.peak_shell,
            "prepared": self.prepared,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(**cfg)


def _shell_profile(grid, spec):
    kmag = grid.wavenumber_magnitude()
    with np.errstate(divide="ignore", invalid="ignore"):
        profile = (
            spec.amplitude
            * (kmag / spec.peak_shell) ** 2
            * np.exp(-spec.tau0 * kmag ** (1.0 / spec.s))
        )
    profile[(0,) * grid.dim] = 0.0  # zero mean
    profile[kmag > grid.dealias_cutoff] = 0.0
    return profile


def _check_resolved(grid, spec, profile):
    if spec.amplitude == 0.0:
        return
    kmag = grid.wavenumber_magnitude()
    cutoff = grid.dealias_cutoff
    edge = profile[(kmag > cutoff - 1.5) & (kmag <= cutoff)]
    peak = float(np.max(profile))
    if edge.size == 0 or peak == 0.0:
        return
    if float(np.max(edge)) > peak / RESOLUTION_DECAY_FACTOR:
        raise ResolutionError(
            f"spectrum with tau0 = {spec.tau0} is unresolved at the grid cutoff"
        )


def _random_phase_field(grid, rng, profile):
    """Hermitian random phases from the FFT of white noise, planted amplitudes."""
    noise = rng.standard_normal(grid.shape)
    g = np.fft.fftn(noise)
    mags = np.abs(g)
    phases = np.where(mags == 0.0, 1.0, g / np.where(mags == 0.0, 1.0, mags))
    return SpectralField(grid, profile * phases)


def generate_gevrey(grid, spec):
    """Draw (p0, v0, S0) with planted radius tau0, deterministically in seed."""
    if spec.peak_shell >= grid.dealias_cutoff:
        raise ResolutionError(
            f"peak_shell {spec.peak_shell} is at or above the dealias cutoff"
        )
    profile = _shell_profile(grid, spec)
    _check_resolved(grid, spec, profile)
    rng = np.random.default_rng(spec.seed)
    p0 = _random_phase_field(grid, rng, profile)
    v0 = tuple(_random_phase_field(grid, rng, profile) for _ in range(grid.dim))
    S0 = _random_phase_field(grid, rng, profile)
    return p0, v0, S0


def make_well_prepared(v0, S0, model, eps, cfg=EllipticConfig()):
    """Project v0 to div-free by r0(S0) and zero the pressure fluctuation.

    The stiff (1/eps) L u term then vanishes at t = 0, so the first time
    derivative stays O(1) as eps -> 0.
    """
    grid = S0.grid
    r0 = r0_field(model, S0)
    v_proj, _ = variable_density_projection(list(v0), r0, cfg)
    p0 = zero_field(grid)
    return p0, tuple(v_proj), S0


def initial_state(grid, spec, model, eps, cfg=EllipticConfig()):
    """Generate a FlowState, optionally well-prepared, from a DataSpec."""
    p0, v0, S0 = generate_gevrey(grid, spec)
    if spec.prepared == "well":
        p0, v0, S0 = make_well_prepared(v0, S0, model, eps, cfg)
    return FlowState(p=p0, v=v0, S=S0, epsilon=eps, time=0.0)


def construct_w0(v0, S0, model, cfg=EllipticConfig()):
    """Solve div w0 = 0, curl(r0 w0) = curl(r0 v0) for the limit velocity.

    w0 = v0 + (1/r0) grad phi with div((1/r0) grad phi) = -div v0; the
    correction is curl-annihilated after multiplication by r0, and the mean of
    w0 equals the mean of v0 (the torus uniqueness choice).
    """
    grid = S0.grid
    r0 = r0_field(model, S0)
    div_v = divergence(list(v0))
    scale = np.sqrt(sum(f.l2_norm() ** 2 for f in v0))
    if div_v.l2_norm() <= 10.0 * cfg.tol * max(scale, 1.0):
        return tuple(v0)
    inv_r0 = pointwise_apply(lambda x: 1.0 / x, r0)
    phi = elliptic_solve_variable(inv_r0, -1.0 * div_v, cfg)
    grad_phi = gradient(phi)
    w0 = tuple(
        v0[j] + pointwise_product(inv_r0, grad_phi[j]) for j in range(grid.dim)
    )
    return w0


def leray_projection(v):
    """Closed-form Fourier projector (I - k k^T/|k|^2) v-hat; constant-density case."""
    grid = v[0].grid
    mesh = [kj.astype(float) for kj in grid.wavenumber_mesh()]
    k2 = sum(kj**2 for kj in mesh)
    safe = np.where(k2 == 0.0, 1.0, k2)
    dot = sum(mesh[j] * v[j].coeffs for j in range(grid.dim))
    out = []
    for j in range(grid.dim):
        coeffs = v[j].coeffs - np.where(k2 == 0.0, 0.0, mesh[j] * dot / safe)
        out.append(SpectralField(grid, coeffs))
    return out
