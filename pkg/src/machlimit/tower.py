"""Time-derivative towers computed from spatial data alone.

Layer n holds (eps d/dt)^n of each state variable at a fixed time, obtained by
repeatedly differentiating the equations in time and expanding all products
with the Leibniz rule:

    eps du/dt = -eps v.grad u - Einv L u,        dS/dt = -v.grad S.

Coefficient layers for a, r and their inverses are advanced through derivative
stacks of the separable factors f(S), g(eps p).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import TowerOverflowError
from .gas import coeff_a, coeff_r
from .spectral import (
    divergence,
    partial_derivative,
    pointwise_apply,
    pointwise_product,
    zero_field,
)

LAYER_NORM_LIMIT = 1e120


@dataclass
class DerivativeTower:
    """The stack (eps d/dt)^n (p, v, S) for n = 0..depth at one time."""

    time: float
    epsilon: float
    depth: int
    p: list
    v: list  # list over n of tuples of dim fields
    s: list
    a: list
    r: list
    a_inv: list
    r_inv: list

    @property
    def grid(self):
        return self.p[0].grid

    def u_layer(self, n):
        return (self.p[n], *self.v[n])

    def s_layer(self, n):
        return self.s[n]


class _FactorStack:
    """Layers (eps d/dt)^n f^(k)(arg) for an entire scalar factor f.

    arg_layers[n] must hold (eps d/dt)^n of the argument.
    """

    def __init__(self, func, arg_layers, max_total):
        self.func = func
        self.arg_layers = arg_layers
        # table[k][n] filled for k + n <= max_total
        self.table = {}
        base = arg_layers[0]
        for k in range(max_total + 1):
            deriv = func.derivative(k)
            self.table[(k, 0)] = pointwise_apply(deriv, base)
        for total in range(1, max_total + 1):
            for k in range(max_total - total + 1):
                n = total  # compute layer n for order-k derivative
                acc = zero_field(base.grid)
                for i in range(n):
                    term = pointwise_product(
                        self.table[(k + 1, i)], self.arg_layers[n - i]
                    )
                    acc = acc + comb(n - 1, i) * term
                self.table[(k, n)] = acc

    def layer(self, n):
        return self.table[(0, n)]


def _leibniz(pairs_left, pairs_right, n, grid):
    """sum_i C(n, i) left[i] * right[n-i], dealiased."""
    acc = zero_field(grid)
    for i in range(n + 1):
        acc = acc + comb(n, i) * pointwise_product(pairs_left[i], pairs_right[n - i])
    return acc


def build_tower(state, model, depth):
    """Compute the derivative tower of a flow state to the requested depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    grid = state.grid
    eps = state.epsilon
    dim = grid.dim

    p_layers = [state.p]
    v_layers = [tuple(state.v)]
    s_layers = [state.S]

    # factor stacks need argument layers; grow them alongside the state layers
    s_args = s_layers  # argument of f1, f2 is S itself
    ep_args = [eps * state.p]  # argument of g1, g2 is eps p

    # coefficient layer 0 with positivity checks
    a_layers = [coeff_a(model, state.S, ep_args[0])]
    r_layers = [coeff_r(model, state.S, ep_args[0])]
    a_inv_layers = [pointwise_apply(lambda x: 1.0 / x, a_layers[0])]
    r_inv_layers = [pointwise_apply(lambda x: 1.0 / x, r_layers[0])]

    if depth == 0:
        return DerivativeTower(
            time=state.time, epsilon=eps, depth=0,
            p=p_layers, v=v_layers, s=s_layers,
            a=a_layers, r=r_layers, a_inv=a_inv_layers, r_inv=r_inv_layers,
        )

    for n in range(depth):
        # S_{n+1} = -eps * sum_i C(n,i) V_i . grad S_{n-i}
        s_next = zero_field(grid)
        for i in range(n + 1):
            c = comb(n, i)
            for j in range(dim):
                dS = partial_derivative(s_layers[n - i], _unit(dim, j))
                s_next = s_next + (-eps * c) * pointwise_product(v_layers[i][j], dS)
        s_layers.append(s_next)

        # P_{n+1} = -sum_i C(n,i) [ eps V_i . grad P_{n-i} + ainv_i div V_{n-i} ]
        p_next = zero_field(grid)
        v_next = [zero_field(grid) for _ in range(dim)]
        for i in range(n + 1):
            c = comb(n, i)
            for j in range(dim):
                dP = partial_derivative(p_layers[n - i], _unit(dim, j))
                p_next = p_next + (-eps * c) * pointwise_product(v_layers[i][j], dP)
            p_next = p_next + (-c) * pointwise_product(
                a_inv_layers[i], divergence(list(v_layers[n - i]))
            )
            for j in range(dim):
                for l in range(dim):
                    dV = partial_derivative(v_layers[n - i][j], _unit(dim, l))
                    v_next[j] = v_next[j] + (-eps * c) * pointwise_product(
                        v_layers[i][l], dV
                    )
                dPj = partial_derivative(p_layers[n - i], _unit(dim, j))
                v_next[j] = v_next[j] + (-c) * pointwise_product(r_inv_layers[i], dPj)
        p_layers.append(p_next)
        v_layers.append(tuple(v_next))
        ep_args.append(eps * p_next)

        # coefficient layers n+1 via the factor stacks (rebuilt lazily below)
        _extend_coefficient_layers(
            model, n + 1, s_layers, ep_args,
            a_layers, r_layers, a_inv_layers, r_inv_layers, grid,
        )

        for f in (s_next, p_next, *v_next):
            norm = f.l2_norm()
            if not np.isfinite(norm) or norm > LAYER_NORM_LIMIT:
                raise TowerOverflowError(
                    f"tower layer {n + 1} overflowed (norm {norm:.3e})",
                    last_stable_depth=n,
                )

    return DerivativeTower(
        time=state.time, epsilon=eps, depth=depth,
        p=p_layers, v=v_layers, s=s_layers,
        a=a_layers, r=r_layers, a_inv=a_inv_layers, r_inv=r_inv_layers,
    )


def _extend_coefficient_layers(model, n, s_layers, ep_args,
                               a_layers, r_layers, a_inv_layers, r_inv_layers, grid):
    """Append layer n to the a, r and inverse towers."""
    f1 = _FactorStack(model.f1, s_layers, n)
    g1 = _FactorStack(model.g1, ep_args, n)
    f2 = _FactorStack(model.f2, s_layers, n)
    g2 = _FactorStack(model.g2, ep_args, n)

    a_n = _leibniz([f1.layer(i) for i in range(n + 1)],
                   [g1.layer(i) for i in range(n + 1)], n, grid)
    r_n = _leibniz([f2.layer(i) for i in range(n + 1)],
                   [g2.layer(i) for i in range(n + 1)], n, grid)
    a_layers.append(a_n)
    r_layers.append(r_n)

    # inverse tower from sum_i C(n,i) r_i q_{n-i} = 0 for n >= 1
    for coeff, inv in ((a_layers, a_inv_layers), (r_layers, r_inv_layers)):
        acc = zero_field(grid)
        for i in range(1, n + 1):
            acc = acc + comb(n, i) * pointwise_product(coeff[i], inv[n - i])
        inv.append(-1.0 * pointwise_product(inv[0], acc))


def tower_of_coefficient(tower, which):
    """Layers of a coefficient tower: 'a', 'r', or 'E_inverse'."""
    if which == "a":
        return list(tower.a)
    if which == "r":
        return list(tower.r)
    if which == "E_inverse":
        return {"a_inv": list(tower.a_inv), "r_inv": list(tower.r_inv)}
    raise KeyError(f"unknown coefficient {which!r}")


def coefficient_rate_identity(tower, model):
    """Direct evaluation of (eps d/dt) r via the chain-rule identity.

    Returns (tower_layer_1, direct), which must agree: the identity reads
    dr/dt = -f2'(S) (v.grad S) g2(eps p) + f2(S) g2'(eps p) eps dp/dt.
    """
    grid = tower.grid
    eps = tower.epsilon
    S0 = tower.s[0]
    p0 = tower.p[0]
    v0 = tower.v[0]

    f2p = pointwise_apply(model.f2.derivative(1), S0)
    g2v = pointwise_apply(model.g2, eps * p0)
    from .spectral import advect

    term1 = (-eps) * pointwise_product(pointwise_product(f2p, advect(list(v0), S0)), g2v)

    f2v = pointwise_apply(model.f2, S0)
    g2p = pointwise_apply(model.g2.derivative(1), eps * p0)
    term2 = pointwise_product(f2v, pointwise_product(g2p, eps * tower.p[1]))
    return tower.r[1], term1 + term2


def _unit(dim, j):
    e = [0] * dim
    e[j] = 1
    return tuple(e)
