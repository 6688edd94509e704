import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from kfix.collision import q_quadratic
from kfix.grid import DistributionField, SpatialGrid, build_sphere_quadrature, build_velocity_grid, time_grid
from kfix.kernel import KernelSpec
from kfix.transport import q_sharp, sharp, sharp_slice, unsharp


def _vg():
    return build_velocity_grid(2, 1.0, 5)


def test_time_zero_is_identity(rng):
    vg, sg = _vg(), SpatialGrid(2, 1.0, 6)
    h = rng.normal(size=sg.shape + vg.shape)
    np.testing.assert_array_equal(sharp_slice(h, 0.0, vg, sg), h)
    np.testing.assert_array_equal(unsharp(h, 0.0, vg, sg), h)


def test_homogeneous_mode_is_identity(rng):
    vg, sg = _vg(), SpatialGrid(2)
    h = rng.normal(size=sg.shape + vg.shape)
    np.testing.assert_array_equal(sharp_slice(h, 0.37, vg, sg), h)


def _reindex(h, vg, sg, t, sign):
    out = np.empty_like(h)
    for i in range(vg.nodes_per_axis):
        for j in range(vg.nodes_per_axis):
            s = np.rint(sign * vg.axis[[i, j]] * t / sg.spacing).astype(int)
            out[:, :, i, j] = np.roll(h[:, :, i, j], (-s[0], -s[1]), axis=(0, 1))
    return out


def test_aligned_shift_is_reindexing(rng):
    # dv t = 0.25 = dx, so every displacement is a whole number of cells
    vg, sg = _vg(), SpatialGrid(2, 1.0, 4)
    h = rng.normal(size=sg.shape + vg.shape)
    np.testing.assert_allclose(sharp_slice(h, 0.5, vg, sg), _reindex(h, vg, sg, 0.5, 1), rtol=0, atol=1e-14)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_aligned_unsharp_inverts_sharp(seed, steps):
    vg, sg = _vg(), SpatialGrid(2, 1.0, 4)
    t = 0.5 * steps
    h = np.random.default_rng(seed).normal(size=sg.shape + vg.shape)
    np.testing.assert_array_equal(unsharp(sharp_slice(h, t, vg, sg), t, vg, sg), h)


@given(st.integers(0, 2**32 - 1), st.floats(0, 3))
def test_shift_preserves_spatial_sums(seed, t):
    vg, sg = _vg(), SpatialGrid(2, 1.0, 5)
    h = np.random.default_rng(seed).normal(size=sg.shape + vg.shape)
    np.testing.assert_allclose(sharp_slice(h, t, vg, sg).sum(axis=(0, 1)), h.sum(axis=(0, 1)), atol=1e-12)


def test_sharp_matches_map_coordinates(rng):
    vg, sg = _vg(), SpatialGrid(2, 1.0, 6)
    h = rng.normal(size=sg.shape + vg.shape)
    np.testing.assert_allclose(sharp_slice(h, 0.23, vg, sg), oracles.shift_oracle(h, 0.23, vg, sg), atol=1e-13)
    np.testing.assert_allclose(unsharp(h, 0.23, vg, sg), oracles.shift_oracle(h, 0.23, vg, sg, -1.0), atol=1e-13)


def test_round_trip_error_is_second_order():
    # t scales with dx so every velocity keeps the same fractional cell shift;
    # at fixed t the interpolation weights change between levels and the
    # error constant with them
    vg = _vg()
    errors = []
    for nx in (8, 16, 32):
        sg = SpatialGrid(2, 1.0, nx)
        t = 0.6 * sg.spacing
        x = sg.nodes.reshape(sg.shape + (2,))
        sp = np.sin(2 * np.pi * x[..., 0]) * np.cos(2 * np.pi * x[..., 1])
        h = sp[..., None, None] * np.ones(vg.shape)
        back = unsharp(sharp_slice(h, t, vg, sg), t, vg, sg)
        errors.append(np.abs(back - h).sum() * sg.cell_volume * vg.cell_volume)
    assert errors[0] / errors[1] >= 3 and errors[1] / errors[2] >= 3


def test_sharp_reads_field_slices():
    vg, sg = _vg(), SpatialGrid(2, 1.0, 4)
    t = time_grid(0.5, 2)
    vals = np.random.default_rng(0).normal(size=(3,) + sg.shape + vg.shape)
    f = DistributionField(t, vals, vg, sg)
    np.testing.assert_allclose(sharp(f, 2), _reindex(vals[2], vg, sg, 0.5, 1), atol=1e-14)


def test_q_sharp_homogeneous_is_q(rng):
    vg = build_velocity_grid(3, 2.0, 5)
    sq = build_sphere_quadrature(3, 4)
    vals = rng.random((2, 1, 1, 1) + vg.shape)
    f = DistributionField(time_grid(0.5, 1), vals, vg)
    np.testing.assert_allclose(q_sharp(f, 1, KernelSpec(), vg, sq)[0, 0, 0],
                               q_quadratic(vals[1, 0, 0, 0], KernelSpec(), vg, sq).total, rtol=1e-14)


def test_q_sharp_of_zero():
    vg, sg = _vg(), SpatialGrid(2, 1.0, 3)
    f = DistributionField(time_grid(0.5, 1), np.zeros((2,) + sg.shape + vg.shape), vg, sg)
    assert not np.any(q_sharp(f, 1, KernelSpec(), vg, build_sphere_quadrature(2, 4)))


def test_q_sharp_inhomogeneous_matches_pointwise_definition(rng):
    vg, sg = _vg(), SpatialGrid(2, 1.0, 4)
    sq = build_sphere_quadrature(2, 6)
    k = KernelSpec("variable_hard_sphere", 1.0, 0.5)
    t = np.array([0.0, 0.37])
    vals = rng.random((2,) + sg.shape + vg.shape)
    f = DistributionField(t, vals, vg, sg)
    ref = oracles.q_sharp_oracle(vals[1:], t[1:], k, vg, sg, sq)[0]
    assert oracles.rel_l1(q_sharp(f, 1, k, vg, sq), ref) <= 1e-10
