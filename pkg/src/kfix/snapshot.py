"""Binary snapshots of one time slice of a field.

Layout (all little-endian)::

    magic          5 bytes   b"KFIX1"
    dim            uint32
    v_extent       float64
    x_period       float64
    v_nodes        uint32    nodes per velocity axis
    x_nodes        uint32    nodes per spatial axis
    time_index     uint32
    payload        float64[x_nodes**dim * v_nodes**dim], row-major (space axes first)
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .grid import DistributionField, SpatialGrid, VelocityGrid

MAGIC = b"KFIX1"
HEADER = struct.Struct("<5sIddIII")


class Snapshot(NamedTuple):
    vgrid: VelocityGrid
    sgrid: SpatialGrid
    time_index: int
    values: np.ndarray


def encode(values, vgrid: VelocityGrid, sgrid: SpatialGrid, time_index: int) -> bytes:
    values = np.asarray(values, dtype=float)
    expected = sgrid.shape + vgrid.shape
    if values.shape != expected:
        raise ValueError(f"slice has shape {values.shape}, expected {expected}")
    head = HEADER.pack(MAGIC, vgrid.dim, vgrid.extent, sgrid.period,
                       vgrid.nodes_per_axis, sgrid.nodes_per_axis, time_index)
    return head + np.ascontiguousarray(values, dtype="<f8").tobytes()


def decode(data: bytes) -> Snapshot:
    if len(data) < HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, dim, extent, period, nv, nx, t_idx = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    vgrid = VelocityGrid(dim, extent, nv)
    sgrid = SpatialGrid(dim, period, nx)
    count = (nx * nv) ** dim
    payload = data[HEADER.size:]
    if len(payload) != 8 * count:
        raise ValueError(f"payload holds {len(payload) // 8} values, header declares {count}")
    values = np.frombuffer(payload, dtype="<f8").astype(float).reshape(sgrid.shape + vgrid.shape)
    return Snapshot(vgrid, sgrid, t_idx, values)


def write_snapshot(path, f: DistributionField, time_index: int) -> Path:
    path = Path(path)
    path.write_bytes(encode(f.values[time_index], f.vgrid, f.sgrid, time_index))
    return path


def read_snapshot(path) -> Snapshot:
    return decode(Path(path).read_bytes())
