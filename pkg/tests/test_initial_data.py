"""Random Gevrey data, preparation, and the limit velocity w0."""

import numpy as np
import pytest

from machlimit.errors import ResolutionError
from machlimit.gas import r0_field
from machlimit.initial_data import (
    DataSpec,
    construct_w0,
    generate_gevrey,
    initial_state,
    leray_projection,
    make_well_prepared,
)
from machlimit.norms import NormSpec, radius_estimate, spatial_norm
from machlimit.spectral import curl, divergence, pointwise_product
from machlimit.tower import build_tower

from conftest import band_limited


def test_spec_validation():
    with pytest.raises(ValueError):
        DataSpec(seed=0, tau0=-1.0)
    with pytest.raises(ValueError):
        DataSpec(seed=0, tau0=0.7, prepared="sideways")
    with pytest.raises(ValueError):
        DataSpec(seed=0, tau0=0.7, s=0.5)


def test_spec_config_round_trip():
    spec = DataSpec(seed=7, tau0=1.4, s=2.0, amplitude=0.1, prepared="general")
    assert DataSpec.from_config(spec.to_config()) == spec


def test_generation_deterministic(grid64):
    spec = DataSpec(seed=11, tau0=0.7, amplitude=0.2)
    a = generate_gevrey(grid64, spec)
    b = generate_gevrey(grid64, spec)
    assert np.array_equal(a[0].coeffs, b[0].coeffs)
    assert all(np.array_equal(x.coeffs, y.coeffs)
               for x, y in zip(a[1], b[1]))
    assert np.array_equal(a[2].coeffs, b[2].coeffs)
    other = generate_gevrey(grid64, DataSpec(seed=12, tau0=0.7, amplitude=0.2))
    assert not np.array_equal(a[0].coeffs, other[0].coeffs)


def test_zero_amplitude_gives_zero_fields(grid64):
    p0, v0, S0 = generate_gevrey(grid64, DataSpec(seed=0, tau0=0.7,
                                                  amplitude=0.0))
    assert p0.l2_norm() == 0.0 and S0.l2_norm() == 0.0
    assert all(f.l2_norm() == 0.0 for f in v0)


def test_planted_radius_recovered(grid64):
    spec = DataSpec(seed=3, tau0=0.7, amplitude=0.2)
    p0, v0, S0 = generate_gevrey(grid64, spec)
    for f in (p0, *v0, S0):
        assert 0.63 <= radius_estimate(f) <= 0.77


def test_unresolved_spectrum_rejected(grid32):
    with pytest.raises(ResolutionError):
        generate_gevrey(grid32, DataSpec(seed=0, tau0=0.7))
    # a steeper radius fits on the same grid
    generate_gevrey(grid32, DataSpec(seed=0, tau0=1.4))


def test_spatial_norm_truncation_stable(grid64):
    spec = DataSpec(seed=4, tau0=0.7, amplitude=0.2)
    p0, _, _ = generate_gevrey(grid64, spec)
    delta = 0.1
    lo = spatial_norm([p0], NormSpec(family="X", tau=delta, m_max=16))
    hi = spatial_norm([p0], NormSpec(family="X", tau=delta, m_max=24))
    assert abs(hi - lo) < 1e-2 * lo


def test_well_prepared_state(grid64, model):
    spec = DataSpec(seed=5, tau0=0.7, amplitude=0.2, prepared="well")
    st = initial_state(grid64, spec, model, eps=0.1)
    assert st.p.l2_norm() == 0.0
    assert divergence(list(st.v)).l2_norm() < 1e-8


def test_preparedness_controls_first_layer(grid64, model):
    # || (eps dt) u || / eps stays O(1) for prepared data and grows like
    # 1/eps for general data
    def layer_ratio(prepared):
        spec = DataSpec(seed=6, tau0=0.7, amplitude=0.2, prepared=prepared)
        out = []
        for eps in (0.2, 0.1):
            st = initial_state(grid64, spec, model, eps=eps)
            tw = build_tower(st, model, 1)
            norm1 = np.sqrt(sum(f.l2_norm() ** 2 for f in tw.u_layer(1)))
            out.append(norm1 / eps)
        return out[1] / out[0]

    assert 0.5 <= layer_ratio("well") <= 2.0
    assert layer_ratio("general") == pytest.approx(2.0, rel=0.2)


def test_w0_identities(grid64, model):
    # div w0 = 0 and curl(r0 w0) = curl(r0 v0), at an amplitude where the
    # quadratic products are fully resolved
    spec = DataSpec(seed=7, tau0=0.7, amplitude=3e-4, prepared="general")
    _, v0, S0 = generate_gevrey(grid64, spec)
    w0 = construct_w0(v0, S0, model)
    r0 = r0_field(model, S0)
    assert divergence(list(w0)).l2_norm() < 1e-10
    lhs = curl([pointwise_product(r0, f) for f in w0])
    rhs = curl([pointwise_product(r0, f) for f in v0])
    # the curl defect bottoms out at the elliptic tolerance
    assert (lhs - rhs).l2_norm() < 1e-9


def test_w0_constant_density_is_leray(grid64, model):
    # with uniform entropy the construction reduces to the Fourier projector
    spec = DataSpec(seed=8, tau0=0.7, amplitude=0.1, prepared="general")
    _, v0, _ = generate_gevrey(grid64, spec)
    S0 = 0.0 * v0[0]
    w0 = construct_w0(v0, S0, model)
    w_ref = leray_projection(list(v0))
    assert sum((a - b).l2_norm() for a, b in zip(w0, w_ref)) < 1e-10


def test_leray_idempotent(grid32):
    rng = np.random.default_rng(9)
    v = [band_limited(grid32, rng, band=6) for _ in range(2)]
    w = leray_projection(v)
    assert divergence(w).l2_norm() < 1e-11
    again = leray_projection(w)
    assert sum((a - b).l2_norm() for a, b in zip(w, again)) < 1e-13


def test_well_prepared_preserves_entropy(grid64, model):
    spec = DataSpec(seed=10, tau0=0.7, amplitude=0.2)
    _, v0, S0 = generate_gevrey(grid64, spec)
    p0, v_prep, S_out = make_well_prepared(v0, S0, model, eps=0.1)
    assert S_out is S0
    assert p0.l2_norm() == 0.0
