"""Symmetrized non-isentropic Euler system.

State variables are u = (p, v) and the entropy S, with the pressure written as
P = p_bar * exp(eps * p).  The system is

    E(S, eps u) (du/dt + v.grad u) + (1/eps) L u = 0,      dS/dt + v.grad S = 0,

where E = diag(a, r I) with separable coefficients a = f1(S) g1(eps p),
r = f2(S) g2(eps p), and L u = (div v, grad p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, StateValidityError
from .spectral import (
    SpectralField,
    advect,
    curl,
    dealias,
    divergence,
    from_physical,
    gradient,
    pointwise_apply,
    pointwise_product,
    require_positive,
    zero_field,
)


class ScalarFunction:
    """Entire scalar function with derivatives of every order."""

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, order):
        """Return the order-th derivative as a plain callable."""
        raise NotImplementedError


class Constant(ScalarFunction):
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def derivative(self, order):
        if order == 0:
            return self
        return Constant(0.0)


class ExpAffine(ScalarFunction):
    """x -> prefactor * exp(rate * x); closed under differentiation."""

    def __init__(self, prefactor, rate):
        self.prefactor = float(prefactor)
        self.rate = float(rate)

    def __call__(self, x):
        return self.prefactor * np.exp(self.rate * np.asarray(x, dtype=float))

    def derivative(self, order):
        return ExpAffine(self.prefactor * self.rate**order, self.rate)


@dataclass(frozen=True)
class GasModel:
    """Separable coefficient model a = f1(S) g1(eps p), r = f2(S) g2(eps p)."""

    gamma: float
    p_bar: float = 1.0
    f1: ScalarFunction = None
    g1: ScalarFunction = None
    f2: ScalarFunction = None
    g2: ScalarFunction = None

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma}")
        if self.p_bar <= 0.0:
            raise ValueError(f"reference pressure must be positive, got {self.p_bar}")
        if self.f1 is None:
            object.__setattr__(self, "f1", Constant(1.0 / self.gamma))
        if self.g1 is None:
            object.__setattr__(self, "g1", Constant(1.0))
        if self.f2 is None:
            object.__setattr__(self, "f2", ExpAffine(1.0, -1.0 / self.gamma))
        if self.g2 is None:
            object.__setattr__(
                self,
                "g2",
                ExpAffine(self.p_bar ** (1.0 / self.gamma - 1.0), 1.0 / self.gamma - 1.0),
            )

    @classmethod
    def ideal(cls, gamma=1.4, p_bar=1.0):
        return cls(gamma=gamma, p_bar=p_bar)

    def to_config(self):
        return {"gamma": self.gamma, "p_bar": self.p_bar}

    @classmethod
    def from_config(cls, cfg):
        return cls.ideal(gamma=cfg.get("gamma", 1.4), p_bar=cfg.get("p_bar", 1.0))


@dataclass(frozen=True)
class FlowState:
    """Symmetrized state (p, v, S) with its Mach number and time."""

    p: SpectralField
    v: tuple
    S: SpectralField
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))
        grid = self.p.grid
        if len(self.v) != grid.dim:
            raise DimensionError(
                f"velocity needs {grid.dim} components, got {len(self.v)}"
            )
        for f in (*self.v, self.S):
            if f.grid != grid:
                raise DimensionError("state components live on different grids")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def grid(self):
        return self.p.grid

    def components(self):
        return (self.p, *self.v, self.S)

    def u_components(self):
        return (self.p, *self.v)

    def is_finite(self):
        return all(f.is_finite() for f in self.components())


def coeff_a(model, S, eps_p):
    """Coefficient a(S, eps p) = f1(S) g1(eps p), strictly positive."""
    f = pointwise_apply(lambda s, q: model.f1(s) * model.g1(q), S, eps_p)
    require_positive(f, "coefficient a")
    return f


def coeff_r(model, S, eps_p):
    """Coefficient r(S, eps p) = f2(S) g2(eps p), strictly positive."""
    f = pointwise_apply(lambda s, q: model.f2(s) * model.g2(q), S, eps_p)
    require_positive(f, "coefficient r")
    return f


def r0_field(model, S):
    """r0 = r(S, 0), the coefficient frozen at zero pressure fluctuation."""
    g20 = float(model.g2(0.0))
    f = pointwise_apply(lambda s: model.f2(s) * g20, S)
    require_positive(f, "coefficient r0")
    return f


def h_tilde_field(model, state):
    """h-tilde with eps * h_tilde = 1 - r0/r; bounded as eps -> 0."""
    eps = state.epsilon
    if isinstance(model.g2, ExpAffine):
        rate = model.g2.rate
        # 1 - g2(0)/g2(eps p) = -expm1(-rate * eps * p); expm1 keeps precision
        return pointwise_apply(
            lambda p: -np.expm1(-rate * eps * p) / eps, state.p
        )
    g20 = float(model.g2(0.0))
    return pointwise_apply(lambda p: (1.0 - g20 / model.g2(eps * p)) / eps, state.p)


def apply_L(p, v):
    """L u = (div v, grad p); exactly skew-symmetric on the torus."""
    return divergence(v), gradient(p)


def rhs_compressible(state, model):
    """Right-hand side (dp/dt, dv/dt, dS/dt) of the symmetrized system."""
    eps = state.epsilon
    eps_p = eps * state.p
    a = coeff_a(model, state.S, eps_p)
    r = coeff_r(model, state.S, eps_p)
    Lp, Lv = apply_L(state.p, state.v)

    inv_a = pointwise_apply(lambda x: 1.0 / x, a)
    inv_r = pointwise_apply(lambda x: 1.0 / x, r)

    dp = -1.0 * advect(state.v, state.p) - (1.0 / eps) * pointwise_product(inv_a, Lp)
    dv = [
        -1.0 * advect(state.v, state.v[j])
        - (1.0 / eps) * pointwise_product(inv_r, Lv[j])
        for j in range(state.grid.dim)
    ]
    dS = -1.0 * advect(state.v, state.S)
    for f in (dp, *dv, dS):
        if not f.is_finite():
            raise StateValidityError("non-finite value in compressible right-hand side")
    return dp, dv, dS


def primitive_to_symmetrized(P, v, S, model, eps):
    """Convert primitive pressure P to the rescaled log-pressure p."""
    values = P.to_physical()
    if np.min(values) <= 0.0:
        raise StateValidityError("primitive pressure must be strictly positive")
    p = from_physical(P.grid, np.log(values / model.p_bar) / eps)
    return FlowState(p=p, v=tuple(v), S=S, epsilon=eps)


def symmetrized_to_primitive(state, model):
    """Recover the primitive pressure P = p_bar * exp(eps p)."""
    P = from_physical(
        state.grid, model.p_bar * np.exp(state.epsilon * state.p.to_physical())
    )
    return P, state.v, state.S


def modified_vorticity(state, model):
    """Modified vorticity curl(r0 v) and its transport forcing.

    Returns (omega, G) where (d/dt + v.grad) omega = G along solutions:
    G = [v.grad, curl](r0 v) + [curl, h_tilde] grad p.
    """
    grid = state.grid
    if grid.dim == 1:
        raise DimensionError("modified vorticity requires dim 2 or 3")
    r0 = r0_field(model, state.S)
    w = [pointwise_product(r0, comp) for comp in state.v]
    omega = curl(w)

    # commutators evaluated from their definitions, spectrally
    adv_w = [advect(state.v, comp) for comp in w]
    if grid.dim == 2:
        g1 = advect(state.v, omega) - curl(adv_w)
    else:
        cadv = curl(adv_w)
        g1 = [advect(state.v, omega[i]) - cadv[i] for i in range(3)]

    h = h_tilde_field(model, state)
    grad_p = gradient(state.p)
    h_grad_p = [pointwise_product(h, g) for g in grad_p]
    g2 = curl(h_grad_p)  # [curl, h] grad p since curl grad p = 0

    if grid.dim == 2:
        return omega, g1 + g2
    return omega, [g1[i] + g2[i] for i in range(3)]


def weighted_energy(state, model):
    """<E u, u>: the energy controlled by the linearized-energy estimate."""
    eps_p = state.epsilon * state.p
    a = coeff_a(model, state.S, eps_p)
    r = coeff_r(model, state.S, eps_p)
    from .spectral import l2_inner

    total = l2_inner(pointwise_product(a, state.p), state.p)
    for comp in state.v:
        total += l2_inner(pointwise_product(r, comp), comp)
    return total
