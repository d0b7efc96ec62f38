"""Snapshot round trips."""

import json

import numpy as np

from machlimit.gas import FlowState
from machlimit.io import load_field, load_state, save_field, save_state

from conftest import band_limited


def test_field_round_trip(tmp_path, grid32):
    rng = np.random.default_rng(0)
    f = band_limited(grid32, rng, band=6)
    save_field(tmp_path / "f", f, "p", time=0.25, epsilon=0.1)
    back, meta = load_field(tmp_path / "f")
    assert (back - f).l2_norm() < 1e-13
    assert meta == {"dim": 2, "n_per_axis": 32, "time": 0.25,
                    "epsilon": 0.1, "name": "p"}


def test_field_layout_is_flat_little_endian(tmp_path, grid32):
    rng = np.random.default_rng(1)
    f = band_limited(grid32, rng, band=6)
    save_field(tmp_path / "f", f, "p")
    raw = np.frombuffer((tmp_path / "f.bin").read_bytes(), dtype="<f8")
    assert raw.shape == (32 * 32,)
    assert np.allclose(raw.reshape(32, 32), f.to_physical())
    sidecar = json.loads((tmp_path / "f.json").read_text())
    assert sidecar["n_per_axis"] == 32


def test_state_round_trip(tmp_path, grid32):
    rng = np.random.default_rng(2)
    st = FlowState(
        p=band_limited(grid32, rng, band=5),
        v=tuple(band_limited(grid32, rng, band=5) for _ in range(2)),
        S=band_limited(grid32, rng, band=5),
        epsilon=0.05,
        time=1.5,
    )
    save_state(tmp_path, st, prefix="snap")
    back = load_state(tmp_path, prefix="snap")
    assert back.epsilon == st.epsilon and back.time == st.time
    assert (back.p - st.p).l2_norm() < 1e-13
    assert all((a - b).l2_norm() < 1e-13 for a, b in zip(back.v, st.v))
    assert (back.S - st.S).l2_norm() < 1e-13
