"""Time integration and elliptic sub-solvers.

Two compressible schemes are provided:

* ``rk4_explicit`` -- classical RK4 on the full stiff right-hand side; the
  trust anchor, with an acoustic CFL restriction dt ~ eps.
* ``exponential_if`` -- integrating-factor RK4: the constant-coefficient part
  (1/eps) Ebar^-1 L (Ebar = spatial mean of E) is integrated exactly per
  Fourier mode, the coefficient deviation and advection explicitly.  The step
  then scales with the flow speed and the coefficient spread, not with 1/eps.

The incompressible limit system is advanced with RK4 plus a variable-density
pressure projection after every stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowUpError,
    CompatibilityError,
    EllipticConvergenceError,
)
from .gas import FlowState, coeff_a, coeff_r, r0_field, rhs_compressible
from .spectral import (
    SpectralField,
    advect,
    divergence,
    gradient,
    l2_inner,
    pointwise_apply,
    pointwise_product,
    zero_field,
)

SCHEMES = ("rk4_explicit", "exponential_if")


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "exponential_if"
    cfl: float = 0.4
    t_end: float = 1.0
    snapshot_stride: int = 10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_end < 0.0:
            raise ValueError("t_end must be >= 0")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")


@dataclass(frozen=True)
class EllipticConfig:
    tol: float = 1e-10
    max_iter: int = 500

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


def _sound_speed(state, model):
    """Physical-grid acoustic speed 1/(eps sqrt(a r)) and its spatial mean value."""
    eps_p = state.epsilon * state.p
    a = coeff_a(model, state.S, eps_p).to_physical()
    r = coeff_r(model, state.S, eps_p).to_physical()
    c = 1.0 / (state.epsilon * np.sqrt(a * r))
    return c, float(np.mean(a)), float(np.mean(r))


def max_speed(state):
    return max(float(np.max(np.abs(comp.to_physical()))) for comp in state.v)


def cfl_dt(state, model, cfl):
    """dt = cfl * dx / (max |v| + max sound speed)."""
    c, _, _ = _sound_speed(state, model)
    return cfl * state.grid.dx / (max_speed(state) + float(np.max(c)))


def stable_dt(state, model, cfl, scheme):
    """Scheme-aware step: the IF scheme only resolves the deviation speed."""
    if scheme == "rk4_explicit":
        return cfl_dt(state, model, cfl)
    c, a_bar, r_bar = _sound_speed(state, model)
    c_mean = 1.0 / (state.epsilon * np.sqrt(a_bar * r_bar))
    c_dev = float(np.max(np.abs(c - c_mean)))
    # the oscillating remainder in the rotating frame tolerates roughly half
    # the Courant number that a plain advective term would
    return 0.5 * cfl * state.grid.dx / (max_speed(state) + c_dev + 1e-12)


def acoustic_frequency(k_mag, epsilon, a_bar, r_bar):
    """Frozen-coefficient dispersion relation: omega = |k| / (eps sqrt(a r))."""
    return k_mag / (epsilon * np.sqrt(a_bar * r_bar))


def _acoustic_propagator(grid, t, epsilon, a_bar, r_bar):
    """Per-mode exact flow of dp/dt = -(div v)/(eps a), dv/dt = -(grad p)/(eps r).

    Returns a function mapping (p_coeffs, [v_coeffs]) to propagated arrays.
    """
    mesh = [kj.astype(float) for kj in grid.wavenumber_mesh()]
    kmag = np.sqrt(sum(kj**2 for kj in mesh))
    omega = acoustic_frequency(kmag, epsilon, a_bar, r_bar) * t
    cos_w, sin_w = np.cos(omega), np.sin(omega)
    safe = np.where(kmag == 0.0, 1.0, kmag)
    khat = [kj / safe for kj in mesh]
    ratio_ra = np.sqrt(r_bar / a_bar)

    def apply(p_c, v_c):
        v_par = sum(khat[j] * v_c[j] for j in range(grid.dim))
        p_new = p_c * cos_w - 1j * ratio_ra * v_par * sin_w
        v_par_new = v_par * cos_w - 1j / ratio_ra * p_c * sin_w
        v_new = [
            v_c[j] + (v_par_new - v_par) * khat[j] for j in range(grid.dim)
        ]
        return p_new, v_new

    return apply


def _rhs_tuple(state, model):
    dp, dv, dS = rhs_compressible(state, model)
    return (dp, *dv, dS)


def _state_from(state, fields, dt_time):
    return FlowState(
        p=fields[0],
        v=tuple(fields[1 : 1 + state.grid.dim]),
        S=fields[-1],
        epsilon=state.epsilon,
        time=state.time + dt_time,
    )


def _axpy(fields_a, fields_b, c):
    return tuple(a + c * b for a, b in zip(fields_a, fields_b))


def _check_finite(state):
    if not state.is_finite():
        raise BlowUpError("NaN/Inf detected after step", time=state.time)
    return state


def _step_rk4(state, model, dt):
    y0 = state.components()
    k1 = _rhs_tuple(state, model)
    k2 = _rhs_tuple(_state_from(state, _axpy(y0, k1, dt / 2), dt / 2), model)
    k3 = _rhs_tuple(_state_from(state, _axpy(y0, k2, dt / 2), dt / 2), model)
    k4 = _rhs_tuple(_state_from(state, _axpy(y0, k3, dt), dt), model)
    new = tuple(
        y + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for y, a, b, c, d in zip(y0, k1, k2, k3, k4)
    )
    return _check_finite(_state_from(state, new, dt))


def _deviation_rhs(state, model, a_bar, r_bar):
    """Full right-hand side minus the mean-coefficient acoustic part."""
    eps = state.epsilon
    eps_p = eps * state.p
    a = coeff_a(model, state.S, eps_p)
    r = coeff_r(model, state.S, eps_p)
    div_v = divergence(list(state.v))
    grad_p = gradient(state.p)

    dev_a = pointwise_apply(lambda x: 1.0 / x - 1.0 / a_bar, a)
    dev_r = pointwise_apply(lambda x: 1.0 / x - 1.0 / r_bar, r)

    dp = -1.0 * advect(state.v, state.p) - (1.0 / eps) * pointwise_product(dev_a, div_v)
    dv = [
        -1.0 * advect(state.v, state.v[j])
        - (1.0 / eps) * pointwise_product(dev_r, grad_p[j])
        for j in range(state.grid.dim)
    ]
    dS = -1.0 * advect(state.v, state.S)
    return (dp, *dv, dS)


def _apply_propagator(grid, prop, fields):
    """Propagate (p, v) coefficients; S passes through unchanged."""
    dim = grid.dim
    p_c, v_c = prop(fields[0].coeffs, [f.coeffs for f in fields[1 : 1 + dim]])
    out = [SpectralField(grid, p_c)]
    out += [SpectralField(grid, c) for c in v_c]
    out.append(fields[-1])
    return tuple(out)


def _step_exponential_if(state, model, dt):
    """Integrating-factor RK4 about the mean-coefficient acoustic operator."""
    grid = state.grid
    _, a_bar, r_bar = _sound_speed(state, model)
    e_half = _acoustic_propagator(grid, dt / 2, state.epsilon, a_bar, r_bar)
    e_full = _acoustic_propagator(grid, dt, state.epsilon, a_bar, r_bar)

    n = lambda st: _deviation_rhs(st, model, a_bar, r_bar)
    y0 = state.components()

    k1 = n(state)
    u1 = _apply_propagator(grid, e_half, _axpy(y0, k1, dt / 2))
    k2 = n(_state_from(state, u1, dt / 2))
    u2 = _axpy(_apply_propagator(grid, e_half, y0), k2, dt / 2)
    k3 = n(_state_from(state, u2, dt / 2))
    u3 = _axpy(_apply_propagator(grid, e_full, y0),
               _apply_propagator(grid, e_half, k3), dt)
    k4 = n(_state_from(state, u3, dt))

    term = _apply_propagator(grid, e_full, k1)
    mid = tuple(2.0 * (a + b) for a, b in zip(k2, k3))
    mid = _apply_propagator(grid, e_half, mid)
    new = _apply_propagator(grid, e_full, y0)
    new = tuple(
        y + (dt / 6.0) * (t1 + tm + t4)
        for y, t1, tm, t4 in zip(new, term, mid, k4)
    )
    return _check_finite(_state_from(state, new, dt))


def step_compressible(state, model, dt, scheme="rk4_explicit"):
    """Advance the compressible state by one step of the chosen scheme."""
    if scheme == "rk4_explicit":
        return _step_rk4(state, model, dt)
    if scheme == "exponential_if":
        return _step_exponential_if(state, model, dt)
    raise ValueError(f"unknown scheme {scheme!r}")


def run_compressible(state, model, config, dt=None):
    """Integrate to t_end; returns snapshots every snapshot_stride steps."""
    if dt is None:
        dt = stable_dt(state, model, config.cfl, config.scheme)
    snapshots = [state]
    n_steps = max(0, int(np.ceil(config.t_end / dt - 1e-12))) if config.t_end > 0 else 0
    if n_steps:
        dt = config.t_end / n_steps
    for i in range(n_steps):
        state = step_compressible(state, model, dt, config.scheme)
        if (i + 1) % config.snapshot_stride == 0 or i == n_steps - 1:
            snapshots.append(state)
    return snapshots, dt


# ---------------------------------------------------------------------------
# elliptic solver and projection

def elliptic_solve_variable(coef, rhs, cfg=EllipticConfig()):
    """Solve div(coef grad phi) = rhs on the torus, mean-zero phi.

    Preconditioned conjugate gradients; the preconditioner is the
    constant-coefficient inverse Laplacian scaled by the mean of coef.
    """
    grid = rhs.grid
    rhs_norm = rhs.l2_norm()
    if rhs_norm == 0.0:
        return zero_field(grid)
    if abs(rhs.mean()) > 1e-10 * (rhs_norm / np.sqrt(grid.volume) + 1.0):
        raise CompatibilityError(
            f"elliptic right-hand side must be mean-zero, mean = {rhs.mean():.3e}"
        )
    coef_mean = coef.mean()
    mesh = [kj.astype(float) for kj in grid.wavenumber_mesh()]
    k2 = sum(kj**2 for kj in mesh)
    inv_k2 = np.where(k2 == 0.0, 0.0, 1.0 / np.where(k2 == 0.0, 1.0, k2))

    def apply_op(phi):
        # -div(coef grad phi), SPD on mean-zero fields
        grad = gradient(phi)
        flux = [pointwise_product(coef, g) for g in grad]
        return -1.0 * divergence(flux)

    def precondition(res):
        return SpectralField(grid, res.coeffs * inv_k2 / coef_mean)

    b = -1.0 * rhs
    x = zero_field(grid)
    r = b
    z = precondition(r)
    p = z
    rz = l2_inner(r, z)
    for _ in range(cfg.max_iter):
        Ap = apply_op(p)
        alpha = rz / l2_inner(p, Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        if r.l2_norm() <= cfg.tol * rhs_norm:
            return _zero_mean(x)
        z = precondition(r)
        rz_new = l2_inner(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise EllipticConvergenceError(
        f"no convergence in {cfg.max_iter} iterations",
        residual=r.l2_norm() / rhs_norm,
    )


def _zero_mean(f):
    coeffs = f.coeffs.copy()
    coeffs[(0,) * f.grid.dim] = 0.0
    return SpectralField(f.grid, coeffs)


def variable_density_projection(v_star, r0, cfg=EllipticConfig()):
    """Project v* onto div-free fields: v = v* - (1/r0) grad pi.

    pi solves div((1/r0) grad pi) = div v* and has zero mean.
    """
    grid = v_star[0].grid
    inv_r0 = pointwise_apply(lambda x: 1.0 / x, r0)
    div_star = divergence(list(v_star))
    scale = np.sqrt(sum(f.l2_norm() ** 2 for f in v_star))
    # already divergence-free to within the exit tolerance: nothing to do
    if div_star.l2_norm() <= 10.0 * cfg.tol * max(scale, 1.0):
        return list(v_star), zero_field(grid)
    pi = elliptic_solve_variable(inv_r0, div_star, cfg)
    grad_pi = gradient(pi)
    v = [v_star[j] - pointwise_product(inv_r0, grad_pi[j]) for j in range(grid.dim)]
    return v, pi


# ---------------------------------------------------------------------------
# stratified incompressible limit system

@dataclass(frozen=True)
class IncompressibleState:
    """State (v, S) of the variable-density incompressible limit system."""

    v: tuple
    S: SpectralField
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))

    @property
    def grid(self):
        return self.S.grid

    def is_finite(self):
        return all(f.is_finite() for f in (*self.v, self.S))


def _incompressible_rhs(v, S, model, cfg):
    grid = S.grid
    r0 = r0_field(model, S)
    accel = [-1.0 * advect(v, comp) for comp in v]
    dv, _ = variable_density_projection(accel, r0, cfg)
    dS = -1.0 * advect(v, S)
    return dv, dS


def step_incompressible(state, model, dt, cfg=EllipticConfig()):
    """One RK4 step of the limit system with per-stage projection."""
    v0, S0 = list(state.v), state.S

    kv1, ks1 = _incompressible_rhs(v0, S0, model, cfg)
    kv2, ks2 = _incompressible_rhs(
        [a + (dt / 2) * b for a, b in zip(v0, kv1)], S0 + (dt / 2) * ks1, model, cfg
    )
    kv3, ks3 = _incompressible_rhs(
        [a + (dt / 2) * b for a, b in zip(v0, kv2)], S0 + (dt / 2) * ks2, model, cfg
    )
    kv4, ks4 = _incompressible_rhs(
        [a + dt * b for a, b in zip(v0, kv3)], S0 + dt * ks3, model, cfg
    )
    v_new = [
        a + (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(v0, kv1, kv2, kv3, kv4)
    ]
    S_new = S0 + (dt / 6.0) * (ks1 + 2 * ks2 + 2 * ks3 + ks4)
    # clean residual divergence drift
    v_new, _ = variable_density_projection(v_new, r0_field(model, S_new), cfg)
    out = IncompressibleState(v=tuple(v_new), S=S_new, time=state.time + dt)
    if not out.is_finite():
        raise BlowUpError("NaN/Inf detected after incompressible step", time=out.time)
    return out


def run_incompressible(state, model, t_end, dt, cfg=EllipticConfig(),
                       snapshot_stride=10):
    snapshots = [state]
    n_steps = max(0, int(np.ceil(t_end / dt - 1e-12))) if t_end > 0 else 0
    if n_steps:
        dt = t_end / n_steps
    for i in range(n_steps):
        state = step_incompressible(state, model, dt, cfg)
        if (i + 1) % snapshot_stride == 0 or i == n_steps - 1:
            snapshots.append(state)
    return snapshots, dt
