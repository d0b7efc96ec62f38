"""Empirical verification of the building-block identities and inequalities.

Exact combinatorial identities are checked with rational arithmetic; analytic
inequalities are checked operationally: finiteness, stability under truncation
refinement, and fitted empirical constants, never the non-constructive
constants themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb

import numpy as np

from .multiindex import indices_below, multi_binomial, multi_indices
from .norms import NormSpec, field_norm
from .spectral import (
    SpectralField,
    curl,
    divergence,
    l2_inner,
    partial_derivative,
    pointwise_apply,
    pointwise_product,
    zero_field,
)
from .tower import build_tower


@dataclass
class CheckReport:
    name: str
    trials: int
    statistic: float
    statistic_name: str
    passed: bool
    parameters: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "trials": self.trials,
            self.statistic_name: self.statistic,
            "pass": self.passed,
            "parameters": self.parameters,
        }


def _random_rationals(keys, rng):
    return {k: Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 9)))
            for k in keys}


def check_multiindex_identity(j, l, dim, trials=5, seed=0):
    """sum_{|a|=j} sum_{b<=a,|b|=l} x_b y_{a-b} = (sum_{|b|=l} x)(sum_{|g|=j-l} y)."""
    if not 0 <= l <= j <= 10 or dim not in (2, 3):
        raise ValueError("need 0 <= l <= j <= 10 and dim in {2, 3}")
    rng = np.random.default_rng(seed)
    exact = True
    for _ in range(trials):
        x = _random_rationals(multi_indices(dim, l), rng)
        y = _random_rationals(multi_indices(dim, j - l), rng)
        lhs = Fraction(0)
        for alpha in multi_indices(dim, j):
            for beta in indices_below(alpha):
                if sum(beta) == l:
                    gamma = tuple(a - b for a, b in zip(alpha, beta))
                    lhs += x[beta] * y[gamma]
        rhs = sum(x.values()) * sum(y.values())
        exact = exact and lhs == rhs
    return CheckReport(
        name="multiindex_identity", trials=trials,
        statistic=0.0 if exact else 1.0, statistic_name="max_violation",
        passed=exact, parameters={"j": j, "l": l, "dim": dim, "seed": seed},
    )


def check_binomial_bounds(m_max=20):
    """binom(alpha, beta) <= binom(|alpha|, |beta|), exhaustively, plus the
    scalar form binom(j,l) binom(m-j,k) <= binom(m,l+k)."""
    if m_max > 20:
        raise ValueError("m_max must be <= 20")
    violations = 0
    checked = 0
    for dim in (2, 3):
        cap = m_max if dim == 2 else min(m_max, 12)
        for order in range(cap + 1):
            for alpha in multi_indices(dim, order):
                for beta in indices_below(alpha):
                    checked += 1
                    if multi_binomial(alpha, beta) > comb(order, sum(beta)):
                        violations += 1
    for m in range(m_max + 1):
        for j in range(m + 1):
            for l in range(j + 1):
                for k in range(m - j + 1):
                    checked += 1
                    if comb(j, l) * comb(m - j, k) > comb(m, l + k):
                        violations += 1
    return CheckReport(
        name="binomial_bounds", trials=checked,
        statistic=float(violations), statistic_name="max_violation",
        passed=violations == 0, parameters={"m_max": m_max},
    )


def random_band_limited(grid, rng, band=None, amplitude=1.0, zero_mean=True):
    """Random real field with spectrum confined to |k_j| <= band."""
    if band is None:
        band = int(grid.dealias_cutoff) // 2
    from .spectral import from_physical

    f = from_physical(grid, rng.standard_normal(grid.shape))
    mesh = grid.wavenumber_mesh()
    mask = np.ones(grid.shape, dtype=bool)
    for kj in mesh:
        mask &= np.abs(kj) <= band
    coeffs = np.where(mask, f.coeffs, 0.0)
    if zero_mean:
        coeffs[(0,) * grid.dim] = 0.0
    out = SpectralField(grid, coeffs)
    scale = max(out.l2_norm(), 1e-300)
    return (amplitude / scale) * out


def _product_ratio(f, g, spec):
    fg = pointwise_product(f, g)
    lhs = field_norm([fg], spec)
    nf, ng = field_norm([f], spec), field_norm([g], spec)
    lf, lg = f.l2_norm(), g.l2_norm()
    rhs = nf * (ng + lg) + (nf + lf) * ng
    if rhs == 0.0:
        return 0.0
    return lhs / rhs


def check_product_rule(trials=100, tau=0.125, kappa=0.5, s=1.0, seed=0, grid=None):
    """Ratio |fg|_B / (|f|_B(|g|_B + |g|) + (|f|_B + |f|)|g|_B) on random fields.

    Pass iff the max ratio is finite, <= 10, and drifts < 20% when the
    truncation m_max is raised from 16 to 24.
    """
    if tau > kappa**3 + 1e-12:
        raise ValueError("requires tau <= kappa^3")
    from .spectral import Grid

    if grid is None:
        grid = Grid(dim=2, n=32)
    rng = np.random.default_rng(seed)
    spec16 = NormSpec(family="B", tau=tau, kappa=kappa, s=s, m_max=16)
    spec24 = NormSpec(family="B", tau=tau, kappa=kappa, s=s, m_max=24)
    ratios16, ratios24 = [], []
    for _ in range(trials):
        f = random_band_limited(grid, rng)
        g = random_band_limited(grid, rng)
        ratios16.append(_product_ratio(f, g, spec16))
        ratios24.append(_product_ratio(f, g, spec24))
    worst16, worst24 = max(ratios16), max(ratios24)
    drift = abs(worst24 - worst16) / max(worst16, 1e-300)
    passed = np.isfinite(worst24) and worst24 <= 10.0 and drift < 0.2
    return CheckReport(
        name="product_rule", trials=trials,
        statistic=worst16, statistic_name="worst_ratio",
        passed=bool(passed),
        parameters={"tau": tau, "kappa": kappa, "s": s, "seed": seed,
                    "worst_ratio_m24": worst24, "drift": drift},
    )


COMPOSITION_LIBRARY = {
    "exp": np.exp,
    "cosh": np.cosh,
    "poly": lambda x: 1.0 + x + 0.5 * x**3,
}


def compose(func_name, S):
    """Pointwise composition f(S) for f in the fixed entire-function library."""
    return pointwise_apply(COMPOSITION_LIBRARY[func_name], S)


def check_composition(trials=20, tau=0.125, kappa=0.5, seed=0, grid=None):
    """|f(S)|_B finite at truncation and monotone in the amplitude of S."""
    from .spectral import Grid

    if grid is None:
        grid = Grid(dim=2, n=32)
    rng = np.random.default_rng(seed)
    spec = NormSpec(family="B", tau=tau, kappa=kappa, m_max=16)
    worst = 0.0
    ok = True
    for _ in range(trials):
        S = random_band_limited(grid, rng, amplitude=0.5)
        for name in COMPOSITION_LIBRARY:
            values = [field_norm([compose(name, c * S)], spec)
                      for c in (0.5, 1.0, 2.0)]
            ok = ok and all(np.isfinite(v) for v in values)
            ok = ok and values[0] <= values[1] <= values[2]
            worst = max(worst, values[-1])
    return CheckReport(
        name="composition", trials=trials,
        statistic=worst, statistic_name="worst_ratio",
        passed=bool(ok),
        parameters={"tau": tau, "kappa": kappa, "seed": seed,
                    "library": sorted(COMPOSITION_LIBRARY)},
    )


def _grad_sq(v):
    total = 0.0
    for comp in v:
        for j in range(comp.grid.dim):
            e = [0] * comp.grid.dim
            e[j] = 1
            total += partial_derivative(comp, tuple(e)).l2_norm() ** 2
    return total


def check_div_curl(trials=200, seed=0, grid=None):
    """Torus identity |grad v|^2 = |div v|^2 + |curl v|^2 for mean-zero v."""
    from .spectral import Grid

    grids = [grid] if grid is not None else [Grid(dim=2, n=32), Grid(dim=3, n=16)]
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_grid = max(1, trials // len(grids))
    for g in grids:
        for _ in range(per_grid):
            v = [random_band_limited(g, rng) for _ in range(g.dim)]
            lhs = _grad_sq(v)
            c = curl(v)
            curl_sq = c.l2_norm() ** 2 if g.dim == 2 else sum(
                ci.l2_norm() ** 2 for ci in c
            )
            rhs = divergence(v).l2_norm() ** 2 + curl_sq
            worst = max(worst, abs(lhs - rhs) / max(lhs, 1e-300))
    return CheckReport(
        name="div_curl_identity", trials=trials,
        statistic=worst, statistic_name="max_violation",
        passed=worst <= 1e-12, parameters={"seed": seed},
    )


def _linear_envelope(times, values):
    """Least-squares line shifted up to dominate all points.

    Returns (intercept, slope, relative rms residual).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    fit = intercept + slope * t
    resid = y - fit
    rms = float(np.sqrt(np.mean(resid**2)))
    shift = max(0.0, float(np.max(resid)))
    return intercept + shift, slope, rms / max(float(np.max(np.abs(y))), 1e-300)


def check_transport_estimate(traj, model, tau0, k_hat, kappa=1.0,
                             m_max=10, tower_depth=3):
    """Entropy norm growth along a run stays under a linear-in-t envelope.

    |S(t)|_{A(tau(t))} <= (1 + eta) |S(0)|_{A(tau(0))} + L t with fitted
    (eta, L); pass iff eta <= 0.5 and relative fit residual <= 10%.
    """
    traj = list(traj)
    if len(traj) < 4:
        raise ValueError(f"need at least 4 snapshots, got {len(traj)}")
    from .norms import mixed_norm

    times, values = [], []
    for st in traj:
        tau_t = max(tau0 - k_hat * st.time, tau0 / 2.0)
        spec = NormSpec(family="A", tau=tau_t, kappa=kappa,
                        m_max=m_max, tower_depth=tower_depth)
        tower = build_tower(st, model, tower_depth)
        times.append(st.time)
        values.append(mixed_norm(tower, spec, which="S"))
    env0, slope, residual = _linear_envelope(times, values)
    base = values[0]
    eta = 0.0 if base == 0.0 else env0 / base - 1.0
    passed = eta <= 0.5 and residual <= 0.10
    return CheckReport(
        name="transport_estimate", trials=len(traj),
        statistic=residual, statistic_name="max_violation",
        passed=bool(passed),
        parameters={"eta": eta, "L": max(slope, 0.0),
                    "tau0": tau0, "k_hat": k_hat},
    )


def _energy_commutator(tower, m):
    """F = [E,(eps dt)^m] dt u + [E v . grad, (eps dt)^m] u, per component.

    All time derivatives come from the tower layers; the (1/eps) from dt u is
    kept explicit.
    """
    grid = tower.grid
    eps = tower.epsilon
    dim = grid.dim

    def leib3(c_layers, v_layers_j, u_layers, du_index):
        # -sum over i+j+k=m, (i,j) != (0,0) of multinomial c_i v_j d u_k
        from math import factorial

        acc = None
        for i in range(m + 1):
            for jj in range(m + 1 - i):
                k = m - i - jj
                if i == 0 and jj == 0:
                    continue
                w = factorial(m) // (factorial(i) * factorial(jj) * factorial(k))
                term = pointwise_product(
                    pointwise_product(c_layers[i], v_layers_j[jj]),
                    partial_derivative(u_layers[k], du_index),
                )
                acc = term * float(w) if acc is None else acc + float(w) * term
        return acc

    out = []
    # pressure component: coefficient a
    acc = None
    for i in range(1, m + 1):
        term = (-comb(m, i) / eps) * pointwise_product(tower.a[i], tower.p[m + 1 - i])
        acc = term if acc is None else acc + term
    for l in range(dim):
        e = [0] * dim
        e[l] = 1
        t = leib3(tower.a, [tower.v[n][l] for n in range(m + 1)], tower.p, tuple(e))
        if t is not None:
            acc = -1.0 * t if acc is None else acc - t
    out.append(acc)
    # velocity components: coefficient r
    for comp in range(dim):
        acc = None
        for i in range(1, m + 1):
            term = (-comb(m, i) / eps) * pointwise_product(
                tower.r[i], tower.v[m + 1 - i][comp]
            )
            acc = term if acc is None else acc + term
        for l in range(dim):
            e = [0] * dim
            e[l] = 1
            t = leib3(tower.r, [tower.v[n][l] for n in range(m + 1)],
                      [tower.v[n][comp] for n in range(m + 1)], tuple(e))
            if t is not None:
                acc = -1.0 * t if acc is None else acc - t
        out.append(acc)
    # m = 0 has no commutator terms at all
    return [f if f is not None else zero_field(grid) for f in out]


def _weighted_layer_norm(tower, m):
    """|E^(1/2) (eps dt)^m u|_{L2} from the tower's own coefficients."""
    total = l2_inner(pointwise_product(tower.a[0], tower.p[m]), tower.p[m])
    for comp in range(tower.grid.dim):
        total += l2_inner(
            pointwise_product(tower.r[0], tower.v[m][comp]), tower.v[m][comp]
        )
    return float(np.sqrt(max(total, 0.0)))


def check_energy_lemma(traj, model, m_list=(0, 1, 2, 3), c_limit=50.0):
    """d/dt |E^(1/2)(eps dt)^m u| <= C (|(eps dt)^m u| + |F|) with one fitted C.

    Central finite differences in time of the weighted layer norm; pass iff a
    single C <= c_limit covers all interior snapshots and all m in m_list.
    """
    traj = list(traj)
    if len(traj) < 3:
        raise ValueError(f"need at least 3 snapshots, got {len(traj)}")
    depth = max(m_list) + 1
    towers = [build_tower(st, model, depth) for st in traj]
    c_hat = 0.0
    trials = 0
    for m in m_list:
        norms = [_weighted_layer_norm(tw, m) for tw in towers]
        for i in range(1, len(traj) - 1):
            dt = traj[i + 1].time - traj[i - 1].time
            ddt = (norms[i + 1] - norms[i - 1]) / dt
            tw = towers[i]
            layer = [tw.p[m]] + [tw.v[m][c] for c in range(tw.grid.dim)]
            u_norm = float(np.sqrt(sum(f.l2_norm() ** 2 for f in layer)))
            F = _energy_commutator(tw, m)
            f_norm = float(np.sqrt(sum(f.l2_norm() ** 2 for f in F)))
            rhs = u_norm + f_norm
            trials += 1
            if rhs > 0.0:
                c_hat = max(c_hat, abs(ddt) / rhs)
    return CheckReport(
        name="energy_lemma", trials=trials,
        statistic=c_hat, statistic_name="worst_ratio",
        passed=c_hat <= c_limit,
        parameters={"m_list": list(m_list), "c_limit": c_limit},
    )


def run_exact_suite(seed=0):
    """The zero-tolerance checks."""
    reports = [
        check_multiindex_identity(2, 1, 2, seed=seed),
        check_multiindex_identity(4, 2, 2, seed=seed),
        check_multiindex_identity(3, 1, 3, seed=seed),
        check_binomial_bounds(20),
        check_div_curl(trials=50, seed=seed),
    ]
    return sorted(reports, key=lambda r: r.name)


def run_inequality_suite(seed=0):
    reports = [
        check_product_rule(trials=40, seed=seed),
        check_composition(trials=10, seed=seed),
    ]
    return sorted(reports, key=lambda r: r.name)
