"""Command-line interface.

Subcommands: gen-data, simulate, bootstrap, norms, sweep, check.  Configs are
TOML; machine outputs are JSON/CSV.  Exit codes: 0 success, 2 validation
error, 3 numerical failure, 4 failed checks.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import time as time_mod
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import io as snapshot_io
from .errors import (
    BlowUpError,
    EllipticConvergenceError,
    MachlimitError,
    StateValidityError,
    TowerOverflowError,
)
from .gas import GasModel
from .initial_data import DataSpec, initial_state
from .limits import SweepConfig, config_hash, run_sweep, write_report
from .norms import MIXED_FAMILIES, NormSpec, mixed_norm, spatial_norm
from .solvers import SchemeConfig, run_compressible
from .spectral import Grid
from .tower import build_tower

NUMERICAL_ERRORS = (
    BlowUpError,
    EllipticConvergenceError,
    TowerOverflowError,
    StateValidityError,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CHECKS = 4


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValueError(f"config file not found: {p}")
    try:
        return tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"malformed config {p}: {exc}") from exc


def _build(section, builder, name):
    try:
        return builder(section)
    except TypeError as exc:
        raise ValueError(f"invalid [{name}] config section: {exc}") from exc


def _grid_from(cfg):
    sec = cfg.get("grid", {})
    return _build(sec, lambda s: Grid(dim=s.get("dim", 2), n=s.get("n", 64)), "grid")


def _model_from(cfg):
    return GasModel.from_config(cfg.get("model", {}))


def _data_from(cfg):
    sec = dict(cfg.get("data", {}))
    sec.setdefault("seed", cfg.get("seed", 0))
    sec.setdefault("tau0", 0.7)
    return _build(sec, lambda s: DataSpec(**s), "data")


def _scheme_from(cfg, args):
    sec = dict(cfg.get("scheme", {}))
    if getattr(args, "scheme", None):
        sec["scheme"] = args.scheme
    if getattr(args, "t_end", None) is not None:
        sec["t_end"] = args.t_end
    return _build(sec, lambda s: SchemeConfig(**s), "scheme")


def _epsilon_from(cfg, args):
    eps = getattr(args, "epsilon", None)
    if eps is None:
        eps = cfg.get("epsilon", 0.1)
    return float(eps)


def _prepare_out(args, cfg_path):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg_path is not None:
        shutil.copy(cfg_path, out / "config.toml")
    return out


def _write_manifest(out, command, extra=None):
    manifest = {"command": command, "timestamp": time_mod.time()}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _cmd_gen_data(args):
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    model = _model_from(cfg)
    data = _data_from(cfg)
    eps = _epsilon_from(cfg, args)
    state = initial_state(grid, data, model, eps)
    out = _prepare_out(args, args.config)
    snapshot_io.save_state(out, state, prefix="data")
    (out / "dataspec.json").write_text(json.dumps(data.to_config(), indent=2) + "\n")
    _write_manifest(out, "gen-data", {"epsilon": eps,
                                      "grid": {"dim": grid.dim, "n": grid.n}})
    return EXIT_OK


def _cmd_simulate(args):
    cfg = _load_config(args.config)
    grid = _grid_from(cfg)
    model = _model_from(cfg)
    data = _data_from(cfg)
    scheme = _scheme_from(cfg, args)
    eps = _epsilon_from(cfg, args)
    state = initial_state(grid, data, model, eps)
    out = _prepare_out(args, args.config)
    if scheme.t_end == 0.0:
        snapshots, dt = [state], 0.0
    else:
        snapshots, dt = run_compressible(state, model, scheme)
    for i, snap in enumerate(snapshots):
        snapshot_io.save_state(out, snap, prefix=f"snap_{i:04d}")
    _write_manifest(out, "simulate", {
        "epsilon": eps,
        "scheme": scheme.scheme,
        "dt": dt,
        "n_snapshots": len(snapshots),
        "grid": {"dim": grid.dim, "n": grid.n},
        "model": model.to_config(),
    })
    return EXIT_OK


def _cmd_bootstrap(args):
    cfg = _load_config(args.config)
    state = snapshot_io.load_state(args.state, prefix=args.prefix)
    model = _model_from(cfg)
    tower = build_tower(state, model, args.depth)
    out = _prepare_out(args, args.config)
    lines = ["layer,component,l2_norm"]
    for n in range(tower.depth + 1):
        named = [("p", tower.p[n])]
        named += [(f"v{j}", tower.v[n][j]) for j in range(tower.grid.dim)]
        named += [("S", tower.s[n])]
        for name, fld in named:
            lines.append(f"{n},{name},{fld.l2_norm():.12g}")
            if args.save_layers:
                snapshot_io.save_field(out / f"layer_{n}_{name}", fld, name,
                                       time=state.time, epsilon=state.epsilon)
    (out / "layers.csv").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "bootstrap", {"depth": args.depth})
    return EXIT_OK


def _cmd_norms(args):
    cfg = _load_config(args.config)
    model = _model_from(cfg)
    if args.state:
        state = snapshot_io.load_state(args.state, prefix=args.prefix)
    else:
        grid = _grid_from(cfg)
        data = _data_from(cfg)
        state = initial_state(grid, data, model, _epsilon_from(cfg, args))
    sec = cfg.get("norm", {})
    tau = sec.get("tau", 0.5)
    kappa = sec.get("kappa", 1.0)
    s = sec.get("s", 1.0)
    m_max = sec.get("m_max", 10)
    depth = sec.get("tower_depth", 4)
    tower = build_tower(state, model, depth)
    out = _prepare_out(args, args.config)
    rows = ["time,family,tau,kappa,s,value"]
    for family in MIXED_FAMILIES:
        spec = NormSpec(family=family, tau=tau, kappa=kappa, s=s,
                        m_max=m_max, tower_depth=depth)
        value = mixed_norm(tower, spec, which="u") + mixed_norm(tower, spec, which="S")
        rows.append(f"{state.time},{family},{tau},{kappa},{s},{value:.12g}")
    for family in ("X", "Y"):
        spec = NormSpec(family=family, tau=tau, kappa=kappa, s=s, m_max=m_max)
        value = spatial_norm(list(state.components()), spec)
        rows.append(f"{state.time},{family},{tau},{kappa},{s},{value:.12g}")
    (out / "norms.csv").write_text("\n".join(rows) + "\n")
    _write_manifest(out, "norms", {"tau": tau, "kappa": kappa, "s": s})
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _load_config(args.config)
    sec = dict(cfg.get("sweep", {}))
    sweep_cfg = SweepConfig(
        epsilons=tuple(sec.get("epsilons", [0.2, 0.1])),
        data=_data_from(cfg),
        grid=_grid_from(cfg),
        model=_model_from(cfg),
        t_end=sec.get("t_end", cfg.get("scheme", {}).get("t_end", 0.5)),
        scheme=_scheme_from(cfg, args),
        delta=sec.get("delta"),
        s=sec.get("s", 1.0),
        kappa=sec.get("kappa", 1.0),
        n_snapshots=sec.get("n_snapshots", 8),
        m_max=sec.get("m_max", 10),
        tower_depth=sec.get("tower_depth", 4),
    )
    report = run_sweep(sweep_cfg)
    out = _prepare_out(args, args.config)
    write_report(report, out)
    _write_manifest(out, "sweep", {"config_hash": config_hash(sweep_cfg)})
    if any(r["failed"] for r in report.records):
        return EXIT_NUMERICAL
    return EXIT_OK


def _trajectory_reports(cfg, seed):
    from .lemma_checks import check_energy_lemma, check_transport_estimate
    from .limits import fit_radius_decay, run_compressible_at_times, _radius_series

    import numpy as np

    grid = Grid(dim=2, n=64)
    model = _model_from(cfg)
    data = DataSpec(seed=seed, tau0=0.7, amplitude=0.25, prepared="well")
    state = initial_state(grid, data, model, 0.1)
    times = np.linspace(0.0, 0.3, 7)
    traj = run_compressible_at_times(state, model, SchemeConfig(t_end=0.3), times)
    radius = _radius_series(traj, 1.0)
    try:
        k_hat = max(fit_radius_decay(radius).K_hat, 0.0)
    except ValueError:
        k_hat = 0.0
    tau0 = 0.8 * data.tau0
    return [
        check_transport_estimate(traj, model, tau0, k_hat),
        check_energy_lemma(traj, model),
    ]


def _cmd_check(args):
    from .lemma_checks import run_exact_suite, run_inequality_suite

    cfg = _load_config(args.config)
    seed = cfg.get("seed", 0)
    reports = []
    if args.suite in ("exact", "all"):
        reports += run_exact_suite(seed=seed)
    if args.suite in ("inequalities", "all"):
        reports += run_inequality_suite(seed=seed)
    if args.suite in ("trajectory", "all"):
        reports += _trajectory_reports(cfg, seed)
    reports.sort(key=lambda r: r.name)

    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  "
              f"{r.statistic_name} = {r.statistic:.3e}  trials = {r.trials}")
    if args.out:
        out = _prepare_out(args, args.config)
        (out / "checks.json").write_text(
            json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
        )
        _write_manifest(out, "check", {"suite": args.suite})
    if not all(r.passed for r in reports):
        return EXIT_CHECKS
    return EXIT_OK


def _parser():
    parser = argparse.ArgumentParser(
        prog="machlimit",
        description="Pseudo-spectral diagnostics for the low Mach number limit "
                    "of non-isentropic Euler flow",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", default=None, help="TOML config file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen-data", help="generate initial data snapshots")
    common(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("simulate", help="run the compressible solver")
    common(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--scheme", choices=("rk4_explicit", "exponential_if"))
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bootstrap", help="build a derivative tower from a snapshot")
    common(p)
    p.add_argument("--state", required=True, help="directory with a state snapshot")
    p.add_argument("--prefix", default="state")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--save-layers", action="store_true")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("norms", help="evaluate all norm families at a state")
    common(p)
    p.add_argument("--state", default=None)
    p.add_argument("--prefix", default="state")
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=_cmd_norms)

    p = sub.add_parser("sweep", help="run a Mach-number sweep")
    common(p)
    p.add_argument("--scheme", choices=("rk4_explicit", "exponential_if"))
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check", help="run lemma verification suites")
    p.add_argument("--suite", choices=("exact", "inequalities", "trajectory", "all"),
                   default="all")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MachlimitError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
