"""Quadratic and bilinear Boltzmann collision operators on the velocity grid."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import _kernels
from .grid import EDGE_TOL, Moments, SphereQuadrature, VelocityGrid, compute_moments
from .kernel import KernelSpec


class CollisionResult(NamedTuple):
    gain: np.ndarray
    loss: np.ndarray
    total: np.ndarray


class PairSums(NamedTuple):
    """Gain sums ``G(a, b)``, ``G(b, a)`` and loss sums ``L(a, b)``, ``L(b, a)``.

    ``G(a, b)(v) = int int B a(u') b(v')`` and ``L(a, b)(v) = int int B a(u) b(v)``.
    """

    gab: np.ndarray
    gba: np.ndarray
    lab: np.ndarray
    lba: np.ndarray


def _support_r2(vg: VelocityGrid, *slabs) -> float:
    # squared radius bounding every node where some slice is nonzero,
    # widened by one cell diagonal for the interpolation stencil
    mask = np.zeros(vg.size, dtype=bool)
    for s in slabs:
        mask |= np.any(s != 0, axis=0)
    if not mask.any():
        return -1.0
    r = vg.speeds[mask].max() + np.sqrt(vg.dim) * vg.spacing
    return 2.0 * (r * (1.0 + 1e-9) + 1e-12) ** 2


def pair_sums(a, b, k: KernelSpec, vg: VelocityGrid, sq: SphereQuadrature, out_idx=None) -> PairSums:
    """Collision sums for stacked slices ``a``, ``b`` of shape ``(S, vg.size)``.

    Results have shape ``(S, K)`` for the ``K`` output node indices
    (default: every node).
    """
    a = np.ascontiguousarray(a, dtype=float)
    same = b is a
    b = a if same else np.ascontiguousarray(b, dtype=float)
    if a.ndim != 2 or a.shape[1] != vg.size or a.shape != b.shape:
        raise ValueError("slices must be stacked as (S, n_velocity)")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("collision input must be finite")
    if out_idx is None:
        out_idx = np.arange(vg.size, dtype=np.int64)
    out_idx = np.ascontiguousarray(out_idx, dtype=np.int64)
    r2 = vg.speeds**2
    order = np.argsort(r2, kind="stable").astype(np.int64)
    gab, gba, wa, wb = _kernels.pair_sums(
        a, b, vg.nodes, order, r2, out_idx, sq.nodes, sq.weights,
        k.code, float(k.strength), float(k.exponent),
        float(-vg.extent), float(vg.spacing), vg.nodes_per_axis,
        _support_r2(vg, a, b), not same, EDGE_TOL,
    )
    a_out = a[:, out_idx]
    b_out = b[:, out_idx]
    return PairSums(gab, gba, wa * b_out, wb * a_out)


def _as_stack(f, vg):
    f = np.asarray(f, dtype=float)
    if f.shape != vg.shape:
        raise ValueError(f"slice has shape {f.shape}, expected {vg.shape}")
    return f.reshape(1, -1)


def q_quadratic(f, k: KernelSpec, vg: VelocityGrid, sq: SphereQuadrature) -> CollisionResult:
    """``Q(f, f)(v) = int int B [f(u') f(v') - f(u) f(v)] d omega du`` at every node."""
    a = _as_stack(f, vg)
    p = pair_sums(a, a, k, vg, sq)
    gain = p.gab[0].reshape(vg.shape)
    loss = p.lab[0].reshape(vg.shape)
    return CollisionResult(gain, loss, gain - loss)


def bilinear_from_sums(p: PairSums):
    """Symmetrised ``Q(f, g)`` gain and loss from the sums of ``(a, b) = (f, g)``."""
    gain = 0.5 * (p.gba + p.gab)
    loss = 0.5 * (p.lab + p.lba)
    return gain, loss


def q_bilinear(f, g, k: KernelSpec, vg: VelocityGrid, sq: SphereQuadrature) -> CollisionResult:
    """Symmetrised bilinear operator

    ``Q(f, g) = 1/2 int int B [f(v') g(u') + f(u') g(v') - f(u) g(v) - f(v) g(u)]``,

    which equals ``q_quadratic(f)`` when ``g = f``.
    """
    a = _as_stack(f, vg)
    b = _as_stack(g, vg)
    gain, loss = bilinear_from_sums(pair_sums(a, b, k, vg, sq))
    gain = gain[0].reshape(vg.shape)
    loss = loss[0].reshape(vg.shape)
    return CollisionResult(gain, loss, gain - loss)


def conservation_defect(r: CollisionResult, vg: VelocityGrid) -> Moments:
    """Mass, momentum and energy carried by ``r.total`` (zero for the continuum operator)."""
    return compute_moments(r.total, vg)
