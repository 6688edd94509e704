"""
=========================
The renormalised equation
=========================

For beta(t) = log(1 + t) a converged solution should also satisfy the
renormalised equation up to discretisation error. The residual of that
equation shrinks when time and velocity steps are halved together. Two runs
started from different first iterates then agree after passing through beta.
"""
import numpy as np

from kfix import (
    BetaFunction,
    KernelSpec,
    SolverConfig,
    build_sphere_quadrature,
    build_velocity_grid,
    bump,
    renorm_residual,
    renorm_uniqueness_experiment,
    solve,
)
from kfix.renorm import admissibility_margin

beta = BetaFunction("log1p")
print("admissibility margin |beta'(t)|(1+t)/c:", admissibility_margin(beta))


def setup(n, steps):
    vg = build_velocity_grid(2, 4.0, n)
    cfg = SolverConfig(vg, build_sphere_quadrature(2, 16), KernelSpec(strength=0.02), horizon=0.5, time_steps=steps)
    v = vg.nodes
    f0 = bump(vg, 2.5) * (1 + 0.3 * np.cos(v[:, 0] + 0.5 * v[:, 1])).reshape(vg.shape)
    return cfg, f0.reshape(cfg.slice_shape)


for n, steps in ((9, 4), (17, 8)):
    cfg, f0 = setup(n, steps)
    f, _ = solve(f0, cfg)
    rep = renorm_residual(f, beta, cfg)
    print(f"dv = {rep.grid_resolution['dv']:.3f}, dt = {rep.grid_resolution['dt']:.4f}:"
          f" residual {rep.residual_l1:.3e} ({rep.clipped} values clipped)")

# %%
cfg, f0 = setup(17, 8)
rep, _ = renorm_uniqueness_experiment(f0, cfg, beta, seed=2)
print(f"\nq integral {rep.q_integral:.2e}, cross term {rep.cross_term:.2e}")
print(f"beta distance {rep.beta_distance:.1e} <= raw distance {rep.raw_distance:.1e}; passed={rep.passed}")
