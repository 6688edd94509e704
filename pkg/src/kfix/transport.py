"""Free transport along characteristics on the periodic spatial grid.

``sharp`` maps a laboratory-frame field to ``f#(t, x, v) = f(t, x + v t, v)``;
``unsharp`` is the reverse shift. Off-node spatial values come from periodic
multilinear interpolation, applied one axis at a time.
"""
from __future__ import annotations

import numpy as np

from .collision import PairSums, pair_sums
from .grid import DistributionField, SpatialGrid, SphereQuadrature, VelocityGrid
from .kernel import KernelSpec

SNAP_TOL = 1e-12


def _roll_fraction(arr, shift, axis):
    """``arr`` evaluated at ``index + shift`` along a periodic axis."""
    k = np.floor(shift)
    frac = shift - k
    if frac < SNAP_TOL:
        frac = 0.0
    elif frac > 1.0 - SNAP_TOL:
        k, frac = k + 1, 0.0
    out = np.roll(arr, -int(k), axis=axis)
    if frac:
        out = (1.0 - frac) * out + frac * np.roll(arr, -int(k) - 1, axis=axis)
    return out


def shift_space(arr, displacement, sg: SpatialGrid):
    """Evaluate ``arr(x + displacement)``; spatial axes come first in ``arr``."""
    if sg.homogeneous:
        return np.array(arr, dtype=float)
    out = np.asarray(arr, dtype=float)
    for a, d in enumerate(np.asarray(displacement, dtype=float)):
        out = _roll_fraction(out, d / sg.spacing, a)
    return out


def _velocity_shift(vals, t, vg: VelocityGrid, sg: SpatialGrid, sign: float):
    # the displacement along spatial axis a depends only on velocity index a
    vals = np.array(vals, dtype=float)
    if sg.homogeneous or t == 0.0:
        return vals
    dim = vg.dim
    for a in range(dim):
        for i, va in enumerate(vg.axis):
            sel = (slice(None),) * (dim + a) + (i,)
            vals[sel] = _roll_fraction(vals[sel], sign * va * t / sg.spacing, a)
    return vals


def sharp_slice(h, t: float, vg: VelocityGrid, sg: SpatialGrid):
    """``h(x + v t, v)`` for a space x velocity slice ``h``."""
    return _velocity_shift(h, t, vg, sg, 1.0)


def sharp(f: DistributionField, t_index: int):
    """Space x velocity slice ``f#(t_m, x, v) = f(t_m, x + v t_m, v)``."""
    return sharp_slice(f.values[t_index], f.time_nodes[t_index], f.vgrid, f.sgrid)


def unsharp(h, t: float, vg: VelocityGrid, sg: SpatialGrid):
    """Inverse of ``sharp`` at time ``t``: ``h(x - v t, v)``."""
    return _velocity_shift(h, t, vg, sg, -1.0)


def sharp_all(values, times, vg, sg):
    return np.stack([sharp_slice(v, t, vg, sg) for v, t in zip(values, times)])


def unsharp_all(values, times, vg, sg):
    return np.stack([unsharp(v, t, vg, sg) for v, t in zip(values, times)])


def characteristic_sums(a_vals, b_vals, times, k: KernelSpec, vg: VelocityGrid,
                        sg: SpatialGrid, sq: SphereQuadrature):
    """Collision sums evaluated along characteristics.

    ``a_vals`` and ``b_vals`` are laboratory-frame values of shape
    ``(n_times, *space, *velocity)``. At each ``(t, x, v)`` the velocity
    slices are read at the shifted point ``x + v t`` and the sums are taken
    there, so the output is in the sharp frame. Returns ``(PairSums, a#, b#)``
    with arrays of shape ``(n_times, n_space, n_velocity)``.
    """
    a_vals = np.asarray(a_vals, dtype=float)
    same = b_vals is a_vals
    b_vals = a_vals if same else np.asarray(b_vals, dtype=float)
    nt = len(times)
    nx, nv = sg.size, vg.size
    a_flat = a_vals.reshape(nt, nx, nv)
    b_flat = b_vals.reshape(nt, nx, nv)
    if sg.homogeneous:
        a2 = a_flat[:, 0, :]
        b2 = a2 if same else b_flat[:, 0, :]
        p = pair_sums(a2, b2, k, vg, sq)
        sums = PairSums(*(x.reshape(nt, 1, nv) for x in p))
        return sums, a_flat.copy(), b_flat.copy()

    out = [np.empty((nt, nx, nv)) for _ in range(4)]
    a_sh = np.empty((nt, nx, nv))
    b_sh = np.empty((nt, nx, nv))
    space_shape = sg.shape
    for j, v in enumerate(vg.nodes):
        # whole velocity slices read at x + v_j t, for every time
        sa = np.stack([
            shift_space(a_vals[m].reshape(space_shape + (nv,)), v * t, sg).reshape(nx, nv)
            for m, t in enumerate(times)
        ])
        if same:
            sb = sa
        else:
            sb = np.stack([
                shift_space(b_vals[m].reshape(space_shape + (nv,)), v * t, sg).reshape(nx, nv)
                for m, t in enumerate(times)
            ])
        a2 = sa.reshape(nt * nx, nv)
        b2 = a2 if same else sb.reshape(nt * nx, nv)
        p = pair_sums(a2, b2, k, vg, sq, out_idx=[j])
        for o, x in zip(out, p):
            o[:, :, j] = x.reshape(nt, nx)
        a_sh[:, :, j] = sa[:, :, j]
        b_sh[:, :, j] = sb[:, :, j]
    return PairSums(*out), a_sh, b_sh


def q_sharp_values(values, times, k, vg, sg, sq):
    """``Q#(f, f)`` for every time, shape ``(n_times, *space, *velocity)``."""
    p, _, _ = characteristic_sums(values, values, times, k, vg, sg, sq)
    return (p.gab - p.lab).reshape(np.shape(values))


def q_bilinear_sharp_values(f_vals, g_vals, times, k, vg, sg, sq):
    """Symmetrised ``Q#(f, g)`` for every time."""
    p, _, _ = characteristic_sums(f_vals, g_vals, times, k, vg, sg, sq)
    return (0.5 * (p.gba + p.gab - p.lab - p.lba)).reshape(np.shape(f_vals))


def q_sharp(f: DistributionField, t_index: int, k: KernelSpec, vg: VelocityGrid,
            sq: SphereQuadrature):
    """``Q#(f, f)(t_m, x, v) = Q(f, f)(t_m, x + v t_m, v)`` as a space x velocity slice."""
    if f.vgrid != vg:
        raise ValueError("field is not on the given velocity grid")
    vals = f.values[t_index:t_index + 1]
    times = f.time_nodes[t_index:t_index + 1]
    return q_sharp_values(vals, times, k, vg, f.sgrid, sq)[0]
