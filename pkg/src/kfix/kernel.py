"""Collision kernels ``B(omega, |u - v|)`` and sampled certification of their bounds."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import signal

from ._kernels import COINCIDENT
from .grid import DistributionField, SphereQuadrature, VelocityGrid

FORMS = ("hard_sphere", "maxwell", "variable_hard_sphere")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel form plus the constants ``b1``, ``b`` and ``mu`` of the structural bounds.

    hard_sphere:          ``C |(u - v) . omega|``
    maxwell:              ``C |cos theta|``
    variable_hard_sphere: ``C |u - v|**exponent |cos theta|``
    """

    form: str = "hard_sphere"
    strength: float = 1.0
    exponent: float = 1.0
    b1: float = 1.0
    b: float = 2.0 * np.pi
    mu: float = 1.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown kernel form {self.form!r}; expected one of {FORMS}")
        if self.strength < 0:
            raise ValueError("kernel strength must be >= 0")
        if self.b1 <= 0 or self.b <= 0:
            raise ValueError("b1 and b must be positive")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")

    @property
    def code(self) -> int:
        return FORMS.index(self.form)

    def scaled(self, alpha: float) -> "KernelSpec":
        return replace(self, strength=self.strength * alpha)


def kernel_values(k: KernelSpec, rel_speed, proj) -> np.ndarray:
    """Vectorised ``B`` from the relative speed ``|u - v|`` and ``|(u - v) . omega|``."""
    r = np.abs(np.asarray(rel_speed, dtype=float))
    p = np.abs(np.asarray(proj, dtype=float))
    if k.form == "hard_sphere":
        return k.strength * p
    apart = r > COINCIDENT
    safe = np.where(apart, r, 1.0)
    cos = np.where(apart, p / safe, 0.0)
    if k.form == "maxwell":
        return k.strength * cos
    return k.strength * np.where(apart, safe**k.exponent, 0.0) * cos


def evaluate(k: KernelSpec, omega, u, v) -> float:
    g = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return float(kernel_values(k, np.linalg.norm(g), np.dot(omega, g)))


class BoundReport(NamedTuple):
    b2_satisfied: bool
    b3_satisfied: bool
    worst_b2_ratio: float
    worst_b3_ratio: float
    sample_count: int


def check_bounds(k: KernelSpec, sq: SphereQuadrature, speeds) -> BoundReport:
    """Sample the upper bound B2 and the lower bound B3 over relative speeds.

    For each speed ``r`` the relative velocity is ``r e_1``. B2 compares ``B``
    with ``b1 |(r e_1) . omega| / r * (1 + r**mu)`` at every quadrature node;
    B3 compares the quadrature of ``B`` over the sphere with
    ``b r / (1 + r**mu)``.
    """
    speeds = np.asarray(speeds, dtype=float).reshape(-1)
    if speeds.size == 0:
        raise ValueError("need at least one sample speed")
    if np.any(speeds <= 0):
        raise ValueError("sample speeds must be positive")
    proj = speeds[:, None] * sq.nodes[None, :, 0]
    B = kernel_values(k, speeds[:, None], proj)
    rhs2 = k.b1 * np.abs(proj) / speeds[:, None] * (1.0 + speeds[:, None] ** k.mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio2 = np.where(B == 0, 0.0, B / rhs2)
    rhs3 = k.b * speeds / (1.0 + speeds**k.mu)
    ratio3 = (B @ sq.weights) / rhs3
    worst2 = float(ratio2.max())
    worst3 = float(ratio3.min())
    return BoundReport(worst2 <= 1.0, worst3 >= 1.0, worst2, worst3, int(B.size))


def hypothesis_integral(k: KernelSpec, h, vg: VelocityGrid, sq: SphereQuadrature, v) -> float:
    """Quadrature of ``int int |h(u)| B(omega, |u - v|) d omega du`` at velocity ``v``."""
    h = np.asarray(h, dtype=float)
    if h.shape != vg.shape:
        raise ValueError(f"slice has shape {h.shape}, expected {vg.shape}")
    g = vg.nodes - np.asarray(v, dtype=float)
    B = kernel_values(k, np.linalg.norm(g, axis=1)[:, None], g @ sq.nodes.T)
    return float(np.abs(h).ravel() @ (B @ sq.weights) * vg.cell_volume)


def _offset_table(k: KernelSpec, vg: VelocityGrid, sq: SphereQuadrature) -> np.ndarray:
    # sphere-integrated kernel for every grid offset u - v, shape (2n-1,)*dim
    n = vg.nodes_per_axis
    ax = np.arange(-(n - 1), n) * vg.spacing
    mesh = np.meshgrid(*([ax] * vg.dim), indexing="ij")
    g = np.stack([m.ravel() for m in mesh], axis=-1)
    B = kernel_values(k, np.linalg.norm(g, axis=1)[:, None], g @ sq.nodes.T)
    return (B @ sq.weights).reshape((2 * n - 1,) * vg.dim) * vg.cell_volume


def hypothesis_integrals(k: KernelSpec, slices, vg: VelocityGrid, sq: SphereQuadrature) -> np.ndarray:
    """``hypothesis_integral`` at every grid node for a stack of slices ``(..., *vg.shape)``.

    Uses that the sphere-integrated kernel depends only on the node offset,
    so each slice needs one correlation with a fixed table.
    """
    slices = np.abs(np.asarray(slices, dtype=float))
    lead = slices.shape[: slices.ndim - vg.dim]
    stack = slices.reshape((-1,) + vg.shape)
    table = _offset_table(k, vg, sq)
    out = np.empty_like(stack)
    for i, h in enumerate(stack):
        # valid correlation gives sum_u h(u) T(u - v) in reversed order
        r = signal.correlate(table, h, mode="valid", method="direct")
        out[i] = r[(slice(None, None, -1),) * vg.dim]
    return out.reshape(lead + vg.shape)


class Certification(NamedTuple):
    L_estimate: float
    satisfied: bool
    excluded_nodes: int


def certify_theorem1_hypotheses(
    k: KernelSpec,
    f2: DistributionField,
    g_list,
    vg: VelocityGrid,
    sq: SphereQuadrature,
) -> Certification:
    """Smallest ``L`` satisfying the contraction hypotheses on the sampled fields.

    For every field ``h`` in ``[f2, *g_list]`` and every sampled time, space
    node and velocity ``v``, the ratio
    ``hypothesis_integral(h, v) * b1 * (1 + |v|**mu) / |v|`` is formed; the
    maximum is the estimate. Velocity nodes with ``|v| < dv/2`` (the origin)
    are excluded because the bound vanishes there.
    """
    fields = [f2, *g_list]
    for h in fields:
        if h.vgrid != vg or not h.same_grids(f2):
            raise ValueError("fields must share grids")
    speeds = vg.speeds.reshape(vg.shape)
    keep = speeds >= vg.spacing / 2
    scale = np.where(keep, k.b1 * (1.0 + speeds**k.mu) / np.where(keep, speeds, 1.0), 0.0)
    L = 0.0
    for h in fields:
        I = hypothesis_integrals(k, h.values, vg, sq)
        L = max(L, float((I * scale).max()))
    return Certification(L, L < 1.0, int((~keep).sum()))
