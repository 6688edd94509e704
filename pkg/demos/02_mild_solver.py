"""
==========================
Picard iteration, two ways
==========================

Solve the integrated-along-characteristics form of the equation on a
periodic box. First a weak kernel, where the iteration converges in a
handful of steps; then a kernel so strong that it cannot.
"""
import numpy as np

from kfix import (
    BlowUpError,
    KernelSpec,
    SolverConfig,
    SpatialGrid,
    build_sphere_quadrature,
    build_velocity_grid,
    bump,
    residual,
    solve,
)

vg = build_velocity_grid(2, 3.0, 9)
sg = SpatialGrid(2, period=2.0, nodes_per_axis=8)
x = sg.nodes
density = (1 + 0.5 * np.cos(np.pi * x[:, 0])).reshape(sg.shape)
f0 = np.multiply.outer(density, bump(vg, 2.0))

cfg = SolverConfig(vg, build_sphere_quadrature(2, 8), KernelSpec(strength=0.02), sg, horizon=0.5, time_steps=4)
f, report = solve(f0, cfg)
print("converged:", report.converged, "after", report.iters_used, "iterations")
print("residuals:", ", ".join(f"{r:.2e}" for r in report.residuals))
print("ratios:   ", ", ".join(f"{q:.3f}" for q in report.contraction_ratios))
print("fixed-point defect:", f"{residual(f, f0, cfg):.2e}")
print("smallest value seen per iterate:", ", ".join(f"{m:.2e}" for m in report.min_values))

# %%
# With a huge kernel the iterates overflow; the error names the iterate.
strong = SolverConfig(vg, cfg.sphere, KernelSpec(strength=1e150), sg, horizon=0.5, time_steps=4)
try:
    solve(f0, strong)
except BlowUpError as exc:
    print("\nstrong kernel:", exc, "at iterate", exc.iterate)
