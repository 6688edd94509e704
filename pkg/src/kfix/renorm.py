"""Renormalisation functions and the renormalised form of the equation.

Admissible ``beta`` satisfy ``|beta'(t)| <= c / (1 + t)`` for ``t >= 0``. The
canonical choice is ``beta(t) = log(1 + t)`` with ``c = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .collision import pair_sums
from .grid import DistributionField, l1_norm, slice_l1
from .solver import SolverConfig, solve, time_integral
from .transport import q_bilinear_sharp_values, q_sharp_values, sharp_all, unsharp_all
from .uniqueness import smooth_perturbation

BETA_FORMS = ("log1p", "scaled_log1p", "custom_rational")
# logarithmic sweep used for every sampled check on beta
SWEEP = np.concatenate([[0.0], np.logspace(-6, 6, 601)])
ORDER_ROUNDOFF = 1e-12


def _rational_c(kappa):
    # sup_t kappa^2 (1 + t) / (kappa + t)^2
    return 1.0 if kappa <= 2 else kappa**2 / (4.0 * (kappa - 1.0))


@dataclass(frozen=True)
class BetaFunction:
    """``log1p``: ``shift + log(1 + t)``;
    ``scaled_log1p``: ``shift + scale * log(1 + t)``;
    ``custom_rational``: ``shift + kappa t / (kappa + t)`` (close to ``t`` for ``t << kappa``).
    """

    form: str = "log1p"
    c: float | None = None
    scale: float = 1.0
    shift: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.form not in BETA_FORMS:
            raise ValueError(f"unknown beta form {self.form!r}; expected one of {BETA_FORMS}")
        if self.scale <= 0 or self.kappa <= 0:
            raise ValueError("scale and kappa must be positive")
        minimal = self.minimal_c()
        if self.c is None:
            object.__setattr__(self, "c", minimal)
        elif self.c < minimal * (1 - 1e-12):
            raise ValueError(f"c={self.c} is below the admissible bound {minimal}")

    def minimal_c(self) -> float:
        if self.form == "log1p":
            return 1.0
        if self.form == "scaled_log1p":
            return self.scale
        return _rational_c(self.kappa)

    def shifted(self, by: float) -> "BetaFunction":
        return BetaFunction(self.form, self.c, self.scale, self.shift + by, self.kappa)

    def as_dict(self) -> dict:
        return {"form": self.form, "c": self.c, "scale": self.scale,
                "shift": self.shift, "kappa": self.kappa}


def _nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("beta is defined on t >= 0")
    return t


def beta_eval(b: BetaFunction, t):
    t = _nonneg(t)
    if b.form == "log1p":
        out = np.log1p(t)
    elif b.form == "scaled_log1p":
        out = b.scale * np.log1p(t)
    else:
        out = b.kappa * t / (b.kappa + t)
    return b.shift + out


def beta_prime(b: BetaFunction, t):
    t = _nonneg(t)
    if b.form == "log1p":
        return 1.0 / (1.0 + t)
    if b.form == "scaled_log1p":
        return b.scale / (1.0 + t)
    return b.kappa**2 / (b.kappa + t) ** 2


def admissibility_margin(b: BetaFunction) -> float:
    """Largest ``|beta'(t)| (1 + t) / c`` over the sweep; admissible iff <= 1."""
    return float(np.max(np.abs(beta_prime(b, SWEEP)) * (1.0 + SWEEP)) / b.c)


class RenormResidualReport(NamedTuple):
    residual_l1: float
    grid_resolution: dict
    beta_used: BetaFunction
    clipped: int


def _clip(values):
    neg = values < 0
    return np.where(neg, 0.0, values), int(neg.sum())


def lab_collision(values, cfg: SolverConfig):
    """``Q(f, f)`` at every lab-frame ``(t, x)``, same shape as ``values``."""
    nt = values.shape[0]
    stack = values.reshape(nt * cfg.sgrid.size, cfg.vgrid.size)
    p = pair_sums(stack, stack, cfg.kernel, cfg.vgrid, cfg.sphere)
    return (p.gab - p.lab).reshape(values.shape)


def renorm_residual(f: DistributionField, b: BetaFunction, cfg: SolverConfig) -> RenormResidualReport:
    """Discrete defect of ``d_t beta(f) + v . grad_x beta(f) = beta'(f) Q(f, f)``.

    Time derivatives are centred (second-order one-sided at the ends of
    ``[0, T]``), space derivatives centred and periodic. Negative values are
    clipped to zero before applying ``beta``; their count is reported.
    """
    if f.n_times < 2:
        raise ValueError("renormalised residual needs at least two time nodes")
    vals, clipped = _clip(f.values)
    bf = beta_eval(b, vals)
    edge = 2 if f.n_times >= 3 else 1
    res = np.gradient(bf, f.time_nodes, axis=0, edge_order=edge)
    dim = cfg.vgrid.dim
    if not cfg.sgrid.homogeneous:
        dx = cfg.sgrid.spacing
        for a in range(dim):
            ax = 1 + a
            grad = (np.roll(bf, -1, axis=ax) - np.roll(bf, 1, axis=ax)) / (2 * dx)
            va = cfg.vgrid.nodes[:, a].reshape((1,) * (1 + dim) + cfg.vgrid.shape)
            res = res + va * grad
    res = res - beta_prime(b, vals) * lab_collision(f.values, cfg)
    resolution = {
        "dt": float(f.time_nodes[1] - f.time_nodes[0]),
        "dx": None if cfg.sgrid.homogeneous else cfg.sgrid.spacing,
        "dv": cfg.vgrid.spacing,
    }
    return RenormResidualReport(l1_norm(f.with_values(res)), resolution, b, clipped)


class Theorem2Check(NamedTuple):
    ordering_ok: bool
    q_integral: float
    q_ok: bool
    cross_term: float | None = None
    ordering_gap: float = 0.0


def theorem2_condition_check(b1: BetaFunction, b2: BetaFunction, g: DistributionField,
                             cfg: SolverConfig, f2: DistributionField | None = None) -> Theorem2Check:
    """Ordering ``beta1 >= beta2 + sqrt(c)`` over the sweep and ``|| int_0^T Q#(g, g) dt || < 1``.

    ``c`` is the larger of the two admissibility constants; the ordering is
    checked pointwise. When ``f2`` is given, the L1 norm of the cross term
    ``2 int_0^T Q#(f2, g) dt`` is reported too.
    """
    v1, v2 = beta_eval(b1, SWEEP), beta_eval(b2, SWEEP)
    gap_t = v1 - v2 - np.sqrt(max(b1.c, b2.c))
    gap = float(np.min(gap_t))
    # a shift by exactly sqrt(c) must count as ordered despite rounding
    ordered = bool(np.all(gap_t >= -ORDER_ROUNDOFF * (1.0 + np.abs(v1) + np.abs(v2))))
    t = cfg.time_nodes
    args = (t, cfg.kernel, cfg.vgrid, cfg.sgrid, cfg.sphere)
    qg = time_integral(q_sharp_values(g.values, *args), t)[-1]
    q_int = slice_l1(qg, cfg.vgrid, cfg.sgrid)
    cross = None
    if f2 is not None:
        qc = time_integral(q_bilinear_sharp_values(f2.values, g.values, *args), t)[-1]
        cross = slice_l1(2.0 * qc, cfg.vgrid, cfg.sgrid)
    return Theorem2Check(ordered, q_int, q_int < 1.0, cross, gap)


def renorm_f_map(g: DistributionField, f2: DistributionField, b: BetaFunction,
                 cfg: SolverConfig) -> DistributionField:
    """Renormalised perturbation map, time-resolved and returned in the lab frame.

    At each time ``t``:
    ``beta#(f2+g)(0) - beta#(f2)(0)
    + int_0^t beta'#(f2+g) Q#(f2+g, f2+g) - beta'#(f2) Q#(f2, f2)``.
    The final time slice is the map over the whole interval ``[0, T]``.
    """
    if not (g.same_grids(f2) and g.vgrid == cfg.vgrid and g.sgrid == cfg.sgrid):
        raise ValueError("fields must share the solver grids")
    t = cfg.time_nodes
    args = (t, cfg.kernel, cfg.vgrid, cfg.sgrid, cfg.sphere)
    h = f2.values + g.values
    hs, _ = _clip(sharp_all(h, t, cfg.vgrid, cfg.sgrid))
    fs, _ = _clip(sharp_all(f2.values, t, cfg.vgrid, cfg.sgrid))
    integrand = (beta_prime(b, hs) * q_sharp_values(h, *args)
                 - beta_prime(b, fs) * q_sharp_values(f2.values, *args))
    start = beta_eval(b, hs[0]) - beta_eval(b, fs[0])
    acc = start[None] + time_integral(integrand, t)
    return cfg.field(unsharp_all(acc, t, cfg.vgrid, cfg.sgrid))


@dataclass
class RenormUniquenessReport:
    beta_distance: float
    raw_distance: float
    tolerance: float
    converged: list
    q_integral: float
    q_ok: bool
    cross_term: float | None = None
    reports: list = field(default_factory=list, repr=False)

    @property
    def conclusive(self) -> bool:
        return all(self.converged)

    @property
    def passed(self) -> bool:
        return self.conclusive and self.beta_distance <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "beta_distance": self.beta_distance,
            "raw_distance": self.raw_distance,
            "tolerance": self.tolerance,
            "converged": list(self.converged),
            "conclusive": self.conclusive,
            "passed": self.passed,
            "q_integral": self.q_integral,
            "q_ok": self.q_ok,
            "cross_term": self.cross_term,
            "iterations": [r.as_dict() for r in self.reports],
        }


def renorm_uniqueness_experiment(f0, cfg: SolverConfig, b: BetaFunction, seed: int = 0,
                                 relative_size: float = 0.1):
    """Two solves from perturbed first iterates, compared after mapping through ``beta``.

    The tolerance is ``10 * residual_tol`` times the Lipschitz constant of
    ``beta`` on ``t >= 0`` (which is ``c``). The perturbation between the
    starts is the ``g`` fed to ``theorem2_condition_check``.
    """
    rng = np.random.default_rng(seed)
    base = cfg.extend(f0)
    size = relative_size * l1_norm(base)
    pert = smooth_perturbation(cfg, rng, size) if size > 0 else base * 0.0
    fa, ra = solve(f0, cfg, first_iterate=base)
    fb, rb = solve(f0, cfg, first_iterate=base + pert)
    ba = beta_eval(b, _clip(fa.values)[0])
    bb = beta_eval(b, _clip(fb.values)[0])
    check = theorem2_condition_check(b, b, pert, cfg, f2=fa)
    return RenormUniquenessReport(
        beta_distance=l1_norm(fa.with_values(ba - bb)),
        raw_distance=l1_norm(fa - fb),
        tolerance=10 * cfg.residual_tol * b.c,
        converged=[ra.converged, rb.converged],
        q_integral=check.q_integral,
        q_ok=check.q_ok,
        cross_term=check.cross_term,
        reports=[ra, rb],
    ), (fa, fb)
