"""Field and state snapshots on disk.

A field snapshot is a flat little-endian float64 physical-space array in
row-major axis order plus a JSON sidecar {dim, n_per_axis, time, epsilon,
name}.  A state snapshot is one field snapshot per component.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gas import FlowState
from .spectral import Grid, from_physical

STATE_COMPONENTS = {1: ("p", "v0", "S"), 2: ("p", "v0", "v1", "S"),
                    3: ("p", "v0", "v1", "v2", "S")}


def save_field(path_base, field, name, time=0.0, epsilon=1.0):
    """Write <base>.bin and <base>.json for one field."""
    base = Path(path_base)
    values = np.ascontiguousarray(field.to_physical(), dtype="<f8")
    base.with_suffix(".bin").write_bytes(values.tobytes())
    sidecar = {
        "dim": field.grid.dim,
        "n_per_axis": field.grid.n,
        "time": float(time),
        "epsilon": float(epsilon),
        "name": name,
    }
    base.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_field(path_base):
    """Read a field snapshot; returns (field, sidecar dict)."""
    base = Path(path_base)
    sidecar = json.loads(base.with_suffix(".json").read_text())
    grid = Grid(dim=sidecar["dim"], n=sidecar["n_per_axis"])
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype="<f8")
    values = raw.reshape(grid.shape)
    return from_physical(grid, values), sidecar


def save_state(directory, state, prefix="state"):
    """Write every component of a flow state as field snapshots."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = STATE_COMPONENTS[state.grid.dim]
    for name, field in zip(names, state.components()):
        save_field(directory / f"{prefix}_{name}", field, name,
                   time=state.time, epsilon=state.epsilon)


def load_state(directory, prefix="state"):
    directory = Path(directory)
    probe = json.loads((directory / f"{prefix}_p.json").read_text())
    names = STATE_COMPONENTS[probe["dim"]]
    fields, meta = [], probe
    for name in names:
        f, meta = load_field(directory / f"{prefix}_{name}")
        fields.append(f)
    return FlowState(
        p=fields[0],
        v=tuple(fields[1:-1]),
        S=fields[-1],
        epsilon=meta["epsilon"],
        time=meta["time"],
    )
