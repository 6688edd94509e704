"""Velocity/space grids, sphere quadrature and the discrete functionals built on them.

Fields are stored as arrays of shape ``(n_times, *space_shape, *velocity_shape)``
with ``space_shape = (nx,) * dim`` and ``velocity_shape = (nv,) * dim``.
A spatial grid with a single node is the spatially homogeneous mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

UNIT_TOL = 1e-12
# Off-grid points further than this (in index units) outside [-V, V] read as zero.
EDGE_TOL = 1e-10


def sphere_measure(dim: int) -> float:
    """Surface measure of the unit sphere in ``dim`` dimensions (2 or 3)."""
    if dim == 2:
        return 2.0 * np.pi
    if dim == 3:
        return 4.0 * np.pi
    raise ValueError(f"dim must be 2 or 3, got {dim}")


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform tensor grid on ``[-extent, extent]**dim``."""

    dim: int
    extent: float
    nodes_per_axis: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")
        if self.nodes_per_axis < 2:
            raise ValueError("need at least two nodes per axis")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.nodes_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        # symmetric by construction: axis[i] == -axis[n - 1 - i]
        n = self.nodes_per_axis
        return (np.arange(n) - (n - 1) / 2.0) * self.spacing

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)``, row-major ('ij') order."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    def index_of(self, v) -> int:
        """Flat index of the node closest to ``v``."""
        v = np.asarray(v, dtype=float)
        idx = np.rint(v / self.spacing + (self.nodes_per_axis - 1) / 2.0).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.nodes_per_axis):
            raise ValueError(f"{v} lies outside the velocity grid")
        return int(np.ravel_multi_index(tuple(idx), self.shape))


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid on ``[0, period)**dim``; ``nodes_per_axis == 1`` is the homogeneous mode."""

    dim: int
    period: float = 1.0
    nodes_per_axis: int = 1

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.nodes_per_axis < 1:
            raise ValueError("nodes_per_axis must be >= 1")

    @property
    def homogeneous(self) -> bool:
        return self.nodes_per_axis == 1

    @property
    def spacing(self) -> float:
        return self.period / self.nodes_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        # the homogeneous mode carries unit spatial weight
        return 1.0 if self.homogeneous else self.spacing**self.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        ax = np.arange(self.nodes_per_axis) * self.spacing
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    dim: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.dim or len(weights) != len(nodes):
            raise ValueError("nodes must have shape (K, dim) matching K weights")
        if np.any(np.abs(np.linalg.norm(nodes, axis=1) - 1.0) > UNIT_TOL):
            raise ValueError("quadrature nodes must be unit vectors")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    def integrate(self, func) -> float:
        """Apply the rule to ``func(nodes) -> (K,)``."""
        return float(np.dot(self.weights, func(self.nodes)))


@dataclass(frozen=True, eq=False)
class DistributionField:
    """``f(t, x, v)`` sampled on ``time_nodes x space x velocity``; read-only."""

    time_nodes: np.ndarray
    values: np.ndarray
    vgrid: VelocityGrid
    sgrid: SpatialGrid = field(default=None)

    def __post_init__(self):
        if self.sgrid is None:
            object.__setattr__(self, "sgrid", SpatialGrid(self.vgrid.dim))
        if self.sgrid.dim != self.vgrid.dim:
            raise ValueError("spatial and velocity grids differ in dimension")
        t = np.array(self.time_nodes, dtype=float).reshape(-1)
        vals = np.array(self.values, dtype=float)
        expected = (len(t),) + self.sgrid.shape + self.vgrid.shape
        if vals.shape != expected:
            raise ValueError(f"values have shape {vals.shape}, expected {expected}")
        if len(t) > 1 and not (t[0] == 0.0 and np.all(np.diff(t) > 0)):
            raise ValueError("time nodes must start at 0 and increase")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        t.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "time_nodes", t)
        object.__setattr__(self, "values", vals)

    @property
    def n_times(self) -> int:
        return len(self.time_nodes)

    @property
    def dim(self) -> int:
        return self.vgrid.dim

    def with_values(self, values) -> "DistributionField":
        return DistributionField(self.time_nodes, values, self.vgrid, self.sgrid)

    def flat(self) -> np.ndarray:
        """Values reshaped to ``(n_times, n_space, n_velocity)``."""
        return self.values.reshape(self.n_times, self.sgrid.size, self.vgrid.size)

    def same_grids(self, other: "DistributionField") -> bool:
        return (
            self.vgrid == other.vgrid
            and self.sgrid == other.sgrid
            and np.array_equal(self.time_nodes, other.time_nodes)
        )

    def __add__(self, other):
        if isinstance(other, DistributionField):
            _require_same(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, DistributionField):
            _require_same(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, alpha):
        return self.with_values(self.values * alpha)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _require_same(a: DistributionField, b: DistributionField):
    if not a.same_grids(b):
        raise ValueError("fields are defined on different grids")


def build_velocity_grid(dim: int, extent: float, nodes_per_axis: int) -> VelocityGrid:
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if nodes_per_axis < 4:
        raise ValueError(f"nodes_per_axis must be >= 4, got {nodes_per_axis}")
    if nodes_per_axis % 2 == 0:
        raise ValueError(
            f"nodes_per_axis must be odd so the origin is a node, got {nodes_per_axis}"
        )
    return VelocityGrid(dim, float(extent), int(nodes_per_axis))


def build_sphere_quadrature(dim: int, order: int) -> SphereQuadrature:
    """Quadrature on the unit circle (dim=2) or sphere (dim=3).

    dim=2 uses ``order`` equally spaced angles; dim=3 a product of
    Gauss-Legendre in ``cos(theta)`` and a uniform azimuth rule, ``order**2``
    nodes. Angles are offset by half a step so no node sits on a grid axis.
    """
    if order < 4:
        raise ValueError(f"quadrature order must be >= 4, got {order}")
    phi = (np.arange(order) + 0.5) * (2.0 * np.pi / order)
    if dim == 2:
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(order, 2.0 * np.pi / order)
    elif dim == 3:
        mu, wmu = np.polynomial.legendre.leggauss(order)
        sin_t = np.sqrt(1.0 - mu**2)
        nodes = np.stack(
            [
                np.outer(sin_t, np.cos(phi)).ravel(),
                np.outer(sin_t, np.sin(phi)).ravel(),
                np.repeat(mu, order),
            ],
            axis=-1,
        )
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
        weights = np.outer(wmu, np.full(order, 2.0 * np.pi / order)).ravel()
    else:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    return SphereQuadrature(dim, nodes, weights)


def post_collision(u, v, omega):
    """Outgoing pair ``(u', v')`` for impact direction ``omega``.

    ``u' = u - omega (omega . (u - v))`` and ``v' = v + omega (omega . (u - v))``;
    the pair sum and the sum of squared norms are preserved.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if abs(np.linalg.norm(omega) - 1.0) > UNIT_TOL:
        raise ValueError("omega must be a unit vector")
    s = np.dot(omega, u - v)
    return u - s * omega, v + s * omega


def time_weights(time_nodes) -> np.ndarray:
    """Composite trapezoid weights; a single node gets unit weight."""
    t = np.asarray(time_nodes, dtype=float)
    if len(t) == 1:
        return np.ones(1)
    dt = np.diff(t)
    w = np.zeros(len(t))
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def l1_norm(f: DistributionField) -> float:
    """Discrete L1 norm over time x space x velocity."""
    per_time = np.abs(f.flat()).sum(axis=(1, 2))
    cell = f.sgrid.cell_volume * f.vgrid.cell_volume
    return float(np.dot(time_weights(f.time_nodes), per_time) * cell)


def slice_l1(h, vgrid: VelocityGrid, sgrid: SpatialGrid | None = None) -> float:
    """L1 norm of a velocity or space x velocity slice."""
    w = vgrid.cell_volume * (sgrid.cell_volume if sgrid is not None else 1.0)
    return float(np.abs(h).sum() * w)


class Moments(NamedTuple):
    mass: float
    momentum: np.ndarray
    energy: float


def compute_moments(f, vgrid: VelocityGrid) -> Moments:
    f = np.asarray(f, dtype=float)
    if f.shape != vgrid.shape:
        raise ValueError(f"slice has shape {f.shape}, expected {vgrid.shape}")
    flat = f.ravel() * vgrid.cell_volume
    return Moments(
        float(flat.sum()),
        vgrid.nodes.T @ flat,
        float(np.dot(vgrid.speeds**2, flat)),
    )


def maxwellian(vgrid: VelocityGrid, density=1.0, temperature=0.5, drift=None) -> np.ndarray:
    """``density * (2 pi T)^(-d/2) exp(-|v - drift|^2 / 2T)`` on the grid.

    The default temperature gives ``exp(-|v|^2)`` up to normalisation.
    """
    drift = np.zeros(vgrid.dim) if drift is None else np.asarray(drift, float)
    r2 = np.sum((vgrid.nodes - drift) ** 2, axis=1)
    norm = density / (2.0 * np.pi * temperature) ** (vgrid.dim / 2)
    return (norm * np.exp(-r2 / (2.0 * temperature))).reshape(vgrid.shape)


def bump(vgrid: VelocityGrid, radius: float, power: int = 4) -> np.ndarray:
    """Compactly supported ``(1 - |v|^2/radius^2)_+^power``."""
    r2 = vgrid.speeds**2 / radius**2
    return (np.clip(1.0 - r2, 0.0, None) ** power).reshape(vgrid.shape)


def time_grid(horizon: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("need at least one time step")
    return np.linspace(0.0, horizon, steps + 1)


def constant_in_time(f0, time_nodes, vgrid, sgrid=None) -> DistributionField:
    """Extend an initial slice to every time node."""
    sgrid = sgrid or SpatialGrid(vgrid.dim)
    f0 = np.asarray(f0, dtype=float).reshape(sgrid.shape + vgrid.shape)
    values = np.broadcast_to(f0, (len(time_nodes),) + f0.shape)
    return DistributionField(time_nodes, values, vgrid, sgrid)
