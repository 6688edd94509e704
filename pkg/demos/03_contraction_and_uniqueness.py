"""
=====================================
Certified contraction and uniqueness
=====================================

The perturbation map F is a contraction when a certain weighted integral of
the reference solution and of the perturbations stays below 1. Here the
kernel strength is tuned until that certificate reads L <= 0.5, the measured
Lipschitz ratios of F are compared against it, and three Picard runs
started from different first iterates are checked to land on the same
fixed point. Takes a few minutes on one core.
"""
import numpy as np

from kfix import (
    KernelSpec,
    SolverConfig,
    build_sphere_quadrature,
    build_velocity_grid,
    bump,
    calibrate_strength,
    empirical_contraction,
    l1_norm,
    uniqueness_experiment,
)
from kfix.uniqueness import smooth_perturbation

vg = build_velocity_grid(3, 4.0, 9)
cfg = SolverConfig(vg, build_sphere_quadrature(3, 4), KernelSpec(), horizon=0.5, time_steps=4)
f0 = bump(vg, 2.0).reshape(cfg.slice_shape)

rng = np.random.default_rng(0)
size = 0.1 * l1_norm(cfg.extend(f0))
pairs = [(smooth_perturbation(cfg, rng, size), smooth_perturbation(cfg, rng, size)) for _ in range(20)]
cfg, f2, solve_report, cert = calibrate_strength(f0, cfg, [g for p in pairs for g in p], 0.5)
print(f"kernel strength {cfg.kernel.strength:.4g} certifies L = {cert.L_estimate:.3f}"
      f" ({cert.excluded_nodes} node excluded at the origin)")

# %%
report = empirical_contraction(pairs, f2, cfg, cert.L_estimate)
print(f"measured ratios over {report.pairs_tested} pairs: max {report.max_ratio:.4f},"
      f" allowed {report.hypothesis_L + report.slack:.3f} -> passed={report.passed}")

# %%
uniq, _ = uniqueness_experiment(f0, cfg, 3, seed=1)
print("pairwise distances between fixed points:", ", ".join(f"{d:.1e}" for d in uniq.distances))
print("passed:", uniq.passed)
