"""Mach-number sweep harness: uniform-bound monitoring and limit metrics.

For a descending list of Mach numbers the harness runs the compressible
system from shared (optionally well-prepared) data, runs the limit
incompressible system once from (w0, S0), and reports mixed-norm histories,
fitted radius decay tau(t) = tau0 - K t, and convergence errors measured in
the spatial analytic norm, L2 in time.
"""

from __future__ import annotations

import hashlib
import json
import os
import time as time_mod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, IndeterminateRadiusError, MachlimitError
from .gas import FlowState
from .initial_data import DataSpec, construct_w0, generate_gevrey, make_well_prepared
from .norms import NormSpec, default_delta, mixed_norm, radius_estimate, spatial_norm
from .solvers import (
    EllipticConfig,
    IncompressibleState,
    SchemeConfig,
    max_speed,
    stable_dt,
    step_compressible,
    step_incompressible,
)
from .tower import build_tower

TIME_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class SweepConfig:
    epsilons: tuple
    data: DataSpec
    grid: object
    model: object
    t_end: float
    scheme: SchemeConfig = SchemeConfig()
    delta: float = None
    s: float = 1.0
    kappa: float = 1.0
    n_snapshots: int = 8
    m_max: int = 10
    tower_depth: int = 4
    elliptic: EllipticConfig = EllipticConfig()

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ValueError("epsilons must be nonempty")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError("epsilons must lie in (0, 1]")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if self.t_end < 0.0:
            raise ValueError("t_end must be >= 0")
        if self.delta is None:
            object.__setattr__(
                self, "delta", default_delta(self.kappa, self.tau_initial)
            )
        if self.delta > self.data.tau0:
            raise ValueError("delta must not exceed the data radius tau0")

    @property
    def tau_initial(self):
        """Initial norm radius tau(0), kept inside the data radius."""
        return 0.8 * self.data.tau0


@dataclass
class SweepReport:
    records: list
    orders: dict
    metadata: dict

    def to_json(self):
        return json.dumps(
            {"records": self.records, "orders": self.orders, "metadata": self.metadata},
            indent=2, sort_keys=True,
        )


@dataclass(frozen=True)
class ConvergenceMetrics:
    err_v: float
    err_p: float
    err_S: float
    sup_v: float
    sup_p: float
    sup_S: float

    def __iter__(self):
        return iter((self.err_v, self.err_p, self.err_S))


@dataclass(frozen=True)
class RadiusFit:
    tau0_hat: float
    K_hat: float
    residual: float
    clamped: bool = False

    def __iter__(self):
        return iter((self.tau0_hat, self.K_hat, self.residual))


def _check_aligned(traj_a, traj_b):
    if len(traj_a) != len(traj_b):
        raise AlignmentError(
            f"trajectories have {len(traj_a)} vs {len(traj_b)} snapshots"
        )
    for a, b in zip(traj_a, traj_b):
        if abs(a.time - b.time) > TIME_MATCH_TOL:
            raise AlignmentError(f"snapshot times differ: {a.time} vs {b.time}")
        if a.grid != b.grid:
            raise AlignmentError("trajectories live on different grids")


def convergence_metric(traj_eps, traj_inc, delta, s=1.0, m_max=16):
    """L2-in-time spatial-norm errors of (v, p, S) against the limit run.

    The pressure error uses the zero target.  Also reports the sup-in-time
    variant used for the Gevrey-mode statement.
    """
    traj_eps, traj_inc = list(traj_eps), list(traj_inc)
    _check_aligned(traj_eps, traj_inc)
    family = "X" if s == 1.0 else "Y"
    spec = NormSpec(family=family, tau=delta, s=s, m_max=m_max)
    times = np.array([st.time for st in traj_eps])
    nv, np_, ns = [], [], []
    for a, b in zip(traj_eps, traj_inc):
        nv.append(spatial_norm([a.v[j] - b.v[j] for j in range(a.grid.dim)], spec))
        np_.append(spatial_norm([a.p], spec))
        ns.append(spatial_norm([a.S - b.S], spec))

    def l2_time(vals):
        if len(vals) < 2:
            return 0.0
        return float(np.sqrt(np.trapezoid(np.array(vals) ** 2, times)))

    return ConvergenceMetrics(
        err_v=l2_time(nv), err_p=l2_time(np_), err_S=l2_time(ns),
        sup_v=max(nv), sup_p=max(np_), sup_S=max(ns),
    )


def fit_radius_decay(radius_series):
    """Least-squares line tau(t) = tau0_hat - K_hat t through (t, tau) pairs."""
    pts = [(float(t), float(r)) for t, r in radius_series
           if np.isfinite(t) and np.isfinite(r)]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 radius points, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    r = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(t, r, 1)
    k_raw = -float(slope)
    clamped = k_raw < 0.0
    k_hat = max(k_raw, 0.0)
    fit = intercept + slope * t
    rms = float(np.sqrt(np.mean((r - fit) ** 2)))
    total_decay = abs(k_raw) * (t.max() - t.min())
    residual = 0.0 if rms == 0.0 else rms / max(total_decay, 1e-300)
    return RadiusFit(tau0_hat=float(intercept), K_hat=k_hat,
                     residual=residual, clamped=clamped)


def _segment_steps(t_from, t_to, dt_stable):
    span = t_to - t_from
    n = max(1, int(np.ceil(span / dt_stable - 1e-12)))
    return n, span / n


def run_compressible_at_times(state, model, scheme_cfg, times):
    """Integrate, landing snapshots exactly on the requested times."""
    traj = [state]
    for t_next in times[1:]:
        dt_s = stable_dt(state, model, scheme_cfg.cfl, scheme_cfg.scheme)
        n, dt = _segment_steps(state.time, t_next, dt_s)
        for _ in range(n):
            state = step_compressible(state, model, dt, scheme_cfg.scheme)
        traj.append(state)
    return traj


def run_incompressible_at_times(state, model, times, cfl=0.4, cfg=EllipticConfig()):
    traj = [state]
    for t_next in times[1:]:
        grid = state.grid
        dt_s = cfl * grid.dx / (max_speed(state) + 0.1)
        n, dt = _segment_steps(state.time, t_next, dt_s)
        for _ in range(n):
            state = step_incompressible(state, model, dt, cfg)
        traj.append(state)
    return traj


def _radius_series(traj, s):
    out = []
    for st in traj:
        try:
            out.append((st.time, radius_estimate(st.v[0], s=s)))
        except IndeterminateRadiusError:
            out.append((st.time, float("nan")))
    return out


def _mixed_norm_series(traj, model, cfg, k_hat):
    tau0 = cfg.tau_initial
    series = []
    for st in traj:
        tau_t = max(tau0 - k_hat * st.time, tau0 / 2.0)
        spec = NormSpec(
            family="G", tau=tau_t, kappa=cfg.kappa, s=cfg.s,
            m_max=cfg.m_max, tower_depth=cfg.tower_depth,
        )
        tower = build_tower(st, model, cfg.tower_depth)
        series.append(
            (st.time, tau_t,
             mixed_norm(tower, spec, which="u") + mixed_norm(tower, spec, which="S"))
        )
    return series


def _run_one_epsilon(eps, p0, v0, S0, model, cfg, times, traj_inc):
    state = FlowState(p=p0, v=v0, S=S0, epsilon=eps, time=0.0)
    traj = run_compressible_at_times(state, model, cfg.scheme, times)
    radius = _radius_series(traj, cfg.s)
    try:
        fit = fit_radius_decay(radius)
    except ValueError:
        fit = None
    k_default = cfg.tau_initial / (2.0 * cfg.t_end) if cfg.t_end > 0 else 0.0
    k_hat = fit.K_hat if fit is not None and fit.K_hat > 0 else k_default
    norm_series = _mixed_norm_series(traj, model, cfg, k_hat)
    metrics = convergence_metric(traj, traj_inc, cfg.delta, s=cfg.s)
    return {
        "epsilon": eps,
        "failed": False,
        "sup_mixed_norm": max(v for _, _, v in norm_series),
        "initial_mixed_norm": norm_series[0][2],
        "err_v": metrics.err_v,
        "err_p": metrics.err_p,
        "err_S": metrics.err_S,
        "sup_v": metrics.sup_v,
        "sup_p": metrics.sup_p,
        "sup_S": metrics.sup_S,
        "radius_series": [[t, r] for t, r in radius],
        "norm_series": [[t, tau, v] for t, tau, v in norm_series],
        "fitted_K": fit.K_hat if fit is not None else None,
        "fitted_tau0": fit.tau0_hat if fit is not None else None,
        "fit_residual": fit.residual if fit is not None else None,
    }


def _max_workers(n_jobs):
    env = os.environ.get("MACHLIMIT_THREADS")
    if env:
        return max(1, min(int(env), n_jobs))
    return max(1, min(os.cpu_count() or 1, n_jobs))


def _observed_orders(records):
    ok = [r for r in records if not r["failed"]]
    if len(ok) < 3:
        return None
    orders = {}
    for key in ("err_v", "err_p"):
        vals = []
        for a, b in zip(ok, ok[1:]):
            if a[key] > 0 and b[key] > 0:
                vals.append(
                    np.log(a[key] / b[key]) / np.log(a["epsilon"] / b["epsilon"])
                )
        orders[key] = float(np.mean(vals)) if vals else None
    return orders


def run_sweep(cfg):
    """Run the full sweep; per-epsilon runs execute concurrently."""
    started = time_mod.time()
    grid, model = cfg.grid, cfg.model
    times = np.linspace(0.0, cfg.t_end, cfg.n_snapshots + 1)

    p0_raw, v0_raw, S0 = generate_gevrey(grid, cfg.data)
    if cfg.data.prepared == "well":
        p0, v0, S0 = make_well_prepared(v0_raw, S0, model, cfg.epsilons[0],
                                        cfg.elliptic)
    else:
        p0, v0 = p0_raw, v0_raw

    w0 = construct_w0(v0, S0, model, cfg.elliptic)
    inc0 = IncompressibleState(v=w0, S=S0, time=0.0)
    traj_inc = run_incompressible_at_times(inc0, model, times,
                                           cfl=cfg.scheme.cfl, cfg=cfg.elliptic)

    def job(eps):
        try:
            return _run_one_epsilon(eps, p0, v0, S0, model, cfg, times, traj_inc)
        except MachlimitError as exc:
            return {"epsilon": eps, "failed": True,
                    "error": f"{type(exc).__name__}: {exc}"}

    with ThreadPoolExecutor(max_workers=_max_workers(len(cfg.epsilons))) as pool:
        records = list(pool.map(job, cfg.epsilons))

    survivors = [r for r in records if not r["failed"]]
    if len(survivors) < 2 and len(cfg.epsilons) >= 2:
        raise MachlimitError(
            f"sweep failed: only {len(survivors)} of {len(cfg.epsilons)} runs survived"
        )

    metadata = {
        "config_hash": config_hash(cfg),
        "elapsed_seconds": time_mod.time() - started,
        "n_snapshots": cfg.n_snapshots,
        "delta": cfg.delta,
        "tau_initial": cfg.tau_initial,
        "scheme": cfg.scheme.scheme,
    }
    return SweepReport(records=records, orders=_observed_orders(records),
                       metadata=metadata)


def config_hash(cfg):
    payload = {
        "epsilons": list(cfg.epsilons),
        "data": cfg.data.to_config(),
        "grid": {"dim": cfg.grid.dim, "n": cfg.grid.n},
        "model": cfg.model.to_config(),
        "t_end": cfg.t_end,
        "scheme": cfg.scheme.scheme,
        "cfl": cfg.scheme.cfl,
        "delta": cfg.delta,
        "s": cfg.s,
        "kappa": cfg.kappa,
        "n_snapshots": cfg.n_snapshots,
        "m_max": cfg.m_max,
        "tower_depth": cfg.tower_depth,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_report(report, out_dir):
    """Emit report.json, report.csv and plotdata/*.csv under out_dir."""
    from pathlib import Path

    out = Path(out_dir)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")

    lines = ["epsilon,sup_norm,err_v,err_p,err_S,K_hat"]
    for r in report.records:
        if r["failed"]:
            lines.append(f"{r['epsilon']},failed,,,,")
            continue
        k = "" if r["fitted_K"] is None else f"{r['fitted_K']:.8g}"
        lines.append(
            f"{r['epsilon']},{r['sup_mixed_norm']:.8g},{r['err_v']:.8g},"
            f"{r['err_p']:.8g},{r['err_S']:.8g},{k}"
        )
    (out / "report.csv").write_text("\n".join(lines) + "\n")

    for r in report.records:
        if r["failed"]:
            continue
        tag = f"eps_{r['epsilon']:g}".replace(".", "p")
        rows = ["time,radius"]
        rows += [f"{t:.8g},{v:.8g}" for t, v in r["radius_series"]]
        (out / "plotdata" / f"radius_{tag}.csv").write_text("\n".join(rows) + "\n")
        rows = ["time,tau,norm"]
        rows += [f"{t:.8g},{tau:.8g},{v:.8g}" for t, tau, v in r["norm_series"]]
        (out / "plotdata" / f"norm_{tag}.csv").write_text("\n".join(rows) + "\n")
