"""The perturbation map ``F`` and its measured Lipschitz behaviour.

For a reference trajectory ``f2`` and a perturbation ``g``,

    F(g)(t) = int_0^t Q#(f2 + g, f2 + g) - Q#(f2, f2) d tau.

Two mild solutions with the same data differ by a fixed point of ``F``;
when ``F`` contracts, zero is the only one.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import DistributionField, bump, l1_norm
from .kernel import certify_theorem1_hypotheses
from .solver import SolverConfig, solve, time_integral
from .transport import characteristic_sums, q_sharp_values, unsharp_all

log = logging.getLogger(__name__)

DEFAULT_SLACK = 0.15
DEGENERATE = 1e-14


def _check_grids(cfg: SolverConfig, *fields: DistributionField):
    ref = fields[0]
    for f in fields:
        if not f.same_grids(ref) or f.vgrid != cfg.vgrid or f.sgrid != cfg.sgrid:
            raise ValueError("fields must share the solver grids")
        if not np.array_equal(f.time_nodes, cfg.time_nodes):
            raise ValueError("fields must live on the solver time grid")


def _qs(values, cfg):
    return q_sharp_values(values, cfg.time_nodes, cfg.kernel, cfg.vgrid, cfg.sgrid, cfg.sphere)


def f_map(g: DistributionField, f2: DistributionField, cfg: SolverConfig) -> DistributionField:
    """``F(g)``, accumulated in the sharp frame and returned in the lab frame."""
    _check_grids(cfg, g, f2)
    diff = _qs(f2.values + g.values, cfg) - _qs(f2.values, cfg)
    acc = time_integral(diff, cfg.time_nodes)
    return cfg.field(unsharp_all(acc, cfg.time_nodes, cfg.vgrid, cfg.sgrid))


def f_map_difference(g1: DistributionField, g2: DistributionField, f2: DistributionField,
                     cfg: SolverConfig) -> DistributionField:
    """``F(g1) - F(g2)`` without evaluating the shared ``Q#(f2, f2)`` term."""
    _check_grids(cfg, g1, g2, f2)
    diff = _qs(f2.values + g1.values, cfg) - _qs(f2.values + g2.values, cfg)
    acc = time_integral(diff, cfg.time_nodes)
    return cfg.field(unsharp_all(acc, cfg.time_nodes, cfg.vgrid, cfg.sgrid))


def bilinear_difference_identity_check(g1, g2, f2, cfg: SolverConfig) -> float:
    """L1 gap between ``Q#(f2+g1) - Q#(f2+g2)`` and its eight-term regrouping.

    With ``d = g1 - g2`` the regrouped form is

        B f2(u') d(v') + B f2(v') d(u') - B f2(u) d(v) - B f2(v) d(u)
      + B g1(u') d(v') + B g2(v') d(u') - B g2(u) d(v) - B g1(v) d(u)

    integrated over ``u`` and ``omega``. Each term is computed from its own
    collision sum, so the gap measures roundoff only.
    """
    _check_grids(cfg, g1, g2, f2)
    t = cfg.time_nodes
    args = (t, cfg.kernel, cfg.vgrid, cfg.sgrid, cfg.sphere)
    lhs = _qs(f2.values + g1.values, cfg) - _qs(f2.values + g2.values, cfg)
    d = g1.values - g2.values
    s_f, _, _ = characteristic_sums(f2.values, d, *args)
    s_1, _, _ = characteristic_sums(g1.values, d, *args)
    s_2, _, _ = characteristic_sums(g2.values, d, *args)
    rhs = (s_f.gab + s_f.gba - s_f.lab - s_f.lba
           + s_1.gab - s_1.lba
           + s_2.gba - s_2.lab)
    return l1_norm(cfg.field(lhs - rhs.reshape(lhs.shape)))


@dataclass
class ContractionReport:
    hypothesis_L: float
    empirical_ratios: list
    pairs_tested: int
    slack: float = DEFAULT_SLACK
    skipped: int = 0

    @property
    def max_ratio(self) -> float:
        return max(self.empirical_ratios)

    @property
    def passed(self) -> bool:
        return self.hypothesis_L < 1.0 and self.max_ratio <= self.hypothesis_L + self.slack

    def as_dict(self) -> dict:
        return {
            "hypothesis_L": self.hypothesis_L,
            "empirical_ratios": list(self.empirical_ratios),
            "max_ratio": self.max_ratio,
            "pairs_tested": self.pairs_tested,
            "skipped": self.skipped,
            "slack": self.slack,
            "passed": self.passed,
        }


def empirical_contraction(pairs, f2: DistributionField, cfg: SolverConfig,
                          hypothesis_L: float | None = None,
                          slack: float = DEFAULT_SLACK) -> ContractionReport:
    """Measure ``||F(g1) - F(g2)|| / ||g1 - g2||`` over perturbation pairs.

    Pairs closer than 1e-14 in L1 are skipped. ``hypothesis_L`` defaults to
    the certified estimate over ``f2`` and every perturbation.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one perturbation pair")
    if hypothesis_L is None:
        gs = [g for pair in pairs for g in pair]
        hypothesis_L = certify_theorem1_hypotheses(
            cfg.kernel, f2, gs, cfg.vgrid, cfg.sphere).L_estimate
    ratios = []
    skipped = 0
    for g1, g2 in pairs:
        den = l1_norm(g1 - g2)
        if den < DEGENERATE:
            skipped += 1
            continue
        num = l1_norm(f_map_difference(g1, g2, f2, cfg))
        ratios.append(num / den)
    if not ratios:
        raise ValueError("every perturbation pair is degenerate")
    return ContractionReport(hypothesis_L, ratios, len(ratios), slack, skipped)


def smooth_perturbation(cfg: SolverConfig, rng: np.random.Generator, l1_target: float,
                        envelope=None, modes: int = 4, vanish_at_zero: bool = False):
    """Random smooth field scaled to a prescribed L1 norm.

    A few random cosine modes in velocity (and space, when inhomogeneous)
    times a linear-in-time factor, multiplied by a compactly supported
    velocity ``envelope`` (default: bump of radius ``extent / 2``).
    """
    vg, sg = cfg.vgrid, cfg.sgrid
    if envelope is None:
        envelope = bump(vg, vg.extent / 2)
    v = vg.nodes
    vel = np.zeros(vg.size)
    for _ in range(modes):
        kv = rng.normal(scale=1.0, size=vg.dim)
        vel += rng.normal() * np.cos(v @ kv + rng.uniform(0, 2 * np.pi))
    vel = vel.reshape(vg.shape) * envelope
    space = np.ones(sg.shape)
    if not sg.homogeneous:
        x = sg.nodes
        kx = rng.integers(-2, 3, size=vg.dim) * (2 * np.pi / sg.period)
        space = (1.0 + 0.5 * np.cos(x @ kx + rng.uniform(0, 2 * np.pi))).reshape(sg.shape)
    t = cfg.time_nodes / cfg.horizon
    c0 = 0.0 if vanish_at_zero else rng.uniform(0.5, 1.0)
    tf = c0 + rng.uniform(0.5, 1.0) * t
    vals = tf.reshape((-1,) + (1,) * (2 * vg.dim)) * np.multiply.outer(space, vel)[None]
    g = cfg.field(vals)
    norm = l1_norm(g)
    return g * (l1_target / norm) if norm > 0 else g


@dataclass
class UniquenessReport:
    distances: list
    converged: list
    tolerance: float
    reports: list = field(default_factory=list, repr=False)

    @property
    def conclusive(self) -> bool:
        return all(self.converged)

    @property
    def max_distance(self) -> float:
        return max(self.distances, default=0.0)

    @property
    def passed(self) -> bool:
        return self.conclusive and self.max_distance <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "distances": list(self.distances),
            "max_distance": self.max_distance,
            "converged": list(self.converged),
            "conclusive": self.conclusive,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "iterations": [r.as_dict() for r in self.reports],
        }


def first_iterates(f0, cfg: SolverConfig, n: int, rng: np.random.Generator,
                   relative_size: float = 0.1):
    """``n`` distinct starting trajectories: the f0 extension, then perturbed copies."""
    base = cfg.extend(f0)
    size = relative_size * l1_norm(base)
    out = [base]
    for i in range(1, n):
        if size == 0:
            out.append(base)
            continue
        out.append(base + smooth_perturbation(cfg, rng, size * i))
    return out


def uniqueness_experiment(f0, cfg: SolverConfig, n_perturbations: int,
                          seed: int = 0, relative_size: float = 0.1):
    """Solve from distinct first iterates and compare the fixed points pairwise.

    Passes when all runs converge and every pairwise L1 distance is at most
    ``10 * cfg.residual_tol``; a non-converged run makes it inconclusive.
    Returns ``(report, solutions)``.
    """
    if n_perturbations < 1:
        raise ValueError("need at least one run")
    rng = np.random.default_rng(seed)
    starts = first_iterates(f0, cfg, n_perturbations, rng, relative_size)
    sols, reports = [], []
    for start in starts:
        sol, rep = solve(f0, cfg, first_iterate=start)
        sols.append(sol)
        reports.append(rep)
    distances = [l1_norm(a - b) for a, b in itertools.combinations(sols, 2)]
    report = UniquenessReport(distances, [r.converged for r in reports],
                              10 * cfg.residual_tol, reports)
    return report, sols


def calibrate_strength(f0, cfg: SolverConfig, perturbations, target_L: float,
                       max_rounds: int = 6):
    """Rescale the kernel strength until the certified ``L`` is at most ``target_L``.

    ``L`` is linear in the strength for a fixed reference trajectory, but the
    reference (the mild solution) itself moves with the strength, so the
    solve/certify/rescale loop repeats until the certificate holds.
    Returns ``(cfg, f2, iteration_report, certification)``.
    """
    ref = cfg.extend(f0)
    cert = certify_theorem1_hypotheses(cfg.kernel, ref, perturbations, cfg.vgrid, cfg.sphere)
    for _ in range(max_rounds):
        if cert.L_estimate > target_L:
            cfg = replace(cfg, kernel=cfg.kernel.scaled(0.98 * target_L / cert.L_estimate))
        f2, rep = solve(f0, cfg)
        cert = certify_theorem1_hypotheses(cfg.kernel, f2, perturbations, cfg.vgrid, cfg.sphere)
        log.info("calibration: strength %.6g gives L = %.4f", cfg.kernel.strength, cert.L_estimate)
        if cert.L_estimate <= target_L:
            return cfg, f2, rep, cert
    raise RuntimeError(f"could not certify L <= {target_L} in {max_rounds} rounds")
