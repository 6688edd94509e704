import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from kfix.grid import DistributionField, SpatialGrid, build_velocity_grid, time_grid
from kfix.snapshot import HEADER, MAGIC, decode, encode, read_snapshot, write_snapshot


def _field(rng, dim=2, nx=3, nv=5):
    vg = build_velocity_grid(dim, 1.5, nv)
    sg = SpatialGrid(dim, 2.0, nx)
    t = time_grid(1.0, 2)
    return DistributionField(t, rng.normal(size=(3,) + sg.shape + vg.shape), vg, sg)


def test_file_round_trip_is_bit_exact(tmp_path, rng):
    f = _field(rng)
    path = write_snapshot(tmp_path / "s.kfix", f, 2)
    snap = read_snapshot(path)
    assert snap.time_index == 2 and snap.vgrid == f.vgrid and snap.sgrid == f.sgrid
    assert snap.values.tobytes() == np.ascontiguousarray(f.values[2]).tobytes()


def test_header_layout(rng):
    f = _field(rng, dim=3, nx=1, nv=5)
    data = encode(f.values[1], f.vgrid, f.sgrid, 1)
    assert data[:5] == MAGIC
    assert HEADER.unpack_from(data) == (MAGIC, 3, 1.5, 2.0, 5, 1, 1)
    assert len(data) == HEADER.size + 8 * 125


@given(arrays(np.float64, (2, 2, 5, 5)), st.integers(0, 2**32 - 1))
def test_round_trip_any_values(values, t_idx):
    vg = build_velocity_grid(2, 1.0, 5)
    sg = SpatialGrid(2, 1.0, 2)
    snap = decode(encode(values, vg, sg, t_idx))
    assert snap.values.tobytes() == values.tobytes()
    assert snap.time_index == t_idx


def test_corrupt_inputs_rejected(rng):
    f = _field(rng)
    data = encode(f.values[0], f.vgrid, f.sgrid, 0)
    with pytest.raises(ValueError, match="magic"):
        decode(b"XXXXX" + data[5:])
    with pytest.raises(ValueError, match="payload"):
        decode(data[:-8])
    with pytest.raises(ValueError, match="truncated"):
        decode(data[:10])
    with pytest.raises(ValueError):
        encode(f.values, f.vgrid, f.sgrid, 0)
