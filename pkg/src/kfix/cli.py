"""Command-line front end.

    kfix <scenario> --config <path> [--output <dir>] [--seed <n>]

Each run writes ``report.json``, ``residuals.csv`` and ``moments.csv`` to the
output directory, plus binary snapshots when ``output.snapshot_every > 0``.
Exit status: 0 when the checked property holds, 1 when it fails, 2 when the
run is inconclusive (no convergence, numerical blow-up, unverified
hypotheses). Set ``KFIX_NUM_THREADS`` to cap the worker threads.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import SCENARIOS, ConfigError, RunConfig, parse_config, validate
from .grid import (
    DistributionField,
    build_sphere_quadrature,
    build_velocity_grid,
    bump,
    compute_moments,
    l1_norm,
    maxwellian,
    SpatialGrid,
)
from .kernel import KernelSpec, certify_theorem1_hypotheses, check_bounds
from .renorm import BetaFunction, admissibility_margin, renorm_residual, renorm_uniqueness_experiment
from .snapshot import write_snapshot
from .solver import BlowUpError, SolverConfig, residual, solve
from .uniqueness import calibrate_strength, empirical_contraction, smooth_perturbation, uniqueness_experiment

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2
THREADS_ENV = "KFIX_NUM_THREADS"


def solver_config(rc: RunConfig) -> SolverConfig:
    v, s, k, sv = rc.velocity, rc.space, rc.kernel, rc.solver
    vg = build_velocity_grid(v["dim"], v["extent"], v["nodes_per_axis"])
    return SolverConfig(
        vgrid=vg,
        sphere=build_sphere_quadrature(v["dim"], rc.sphere["order"]),
        kernel=KernelSpec(k["form"], k["strength"], k["exponent"], k["b1"], k["b"], k["mu"]),
        sgrid=SpatialGrid(v["dim"], s["period"], s["nodes_per_axis"]),
        horizon=sv["horizon"],
        time_steps=sv["time_steps"],
        max_picard_iters=sv["max_picard_iters"],
        residual_tol=sv["residual_tol"],
    )


def initial_slice(rc: RunConfig, cfg: SolverConfig) -> np.ndarray:
    ini = rc.initial
    vg, sg = cfg.vgrid, cfg.sgrid
    if ini["kind"] == "vacuum":
        return np.zeros(cfg.slice_shape)
    if ini["kind"] == "bump":
        vel = ini["amplitude"] * bump(vg, ini["radius"])
    else:
        vel = maxwellian(vg, ini["amplitude"], ini["temperature"])
    space = 1.0 + ini["spatial_modulation"] * np.cos(2 * np.pi * sg.nodes[:, 0] / sg.period)
    return np.multiply.outer(space.reshape(sg.shape), vel)


def beta_function(rc: RunConfig) -> BetaFunction:
    ex = rc.experiment
    if ex["beta"] == "custom_rational":
        return BetaFunction("custom_rational", kappa=ex["beta_scale"])
    if ex["beta"] == "scaled_log1p":
        return BetaFunction("scaled_log1p", scale=ex["beta_scale"])
    return BetaFunction("log1p")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class Outputs:
    """Collects everything a scenario reports; writes it in one deterministic pass."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.report: dict = {}
        self.residual_rows: list = []
        self.moment_rows: list = []
        self.snapshots: list = []

    def add_iterations(self, run: int, rep):
        ratios = [None] + rep.contraction_ratios
        for i, (r, q, m) in enumerate(zip(rep.residuals, ratios, rep.min_values), start=1):
            self.residual_rows.append([run, i, repr(r), "" if q is None else repr(q), repr(m)])

    def add_moments(self, f: DistributionField):
        sg = f.sgrid
        for i, t in enumerate(f.time_nodes):
            per_x = f.values[i].reshape((sg.size,) + f.vgrid.shape)
            mass, mom, energy = 0.0, np.zeros(f.vgrid.dim), 0.0
            for sl in per_x:
                m = compute_moments(sl, f.vgrid)
                mass, mom, energy = mass + m.mass, mom + m.momentum, energy + m.energy
            w = sg.cell_volume
            self.moment_rows.append([i, repr(float(t)), repr(mass * w)]
                                    + [repr(float(c * w)) for c in mom] + [repr(energy * w)])

    def write(self, dim: int):
        self.dir.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.report, indent=2, sort_keys=True, default=_jsonable)
        (self.dir / "report.json").write_text(text + "\n")
        with open(self.dir / "residuals.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "iteration", "residual", "ratio", "min_value"])
            w.writerows(self.residual_rows)
        with open(self.dir / "moments.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_index", "t", "mass"] + [f"momentum_{a}" for a in range(dim)] + ["energy"])
            w.writerows(self.moment_rows)
        if self.snapshots:
            snap_dir = self.dir / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            for name, f, idx in self.snapshots:
                write_snapshot(snap_dir / f"{name}_t{idx:04d}.kfix", f, idx)


def _schedule_snapshots(out: Outputs, rc: RunConfig, name: str, f: DistributionField):
    every = rc.output["snapshot_every"]
    if every <= 0:
        return
    idx = list(range(0, f.n_times, every))
    if idx[-1] != f.n_times - 1:
        idx.append(f.n_times - 1)
    out.snapshots.extend((name, f, i) for i in idx)


def _solve_into(out: Outputs, rc, cfg, f0, run=0, **kw):
    f, rep = solve(f0, cfg, **kw)
    out.add_iterations(run, rep)
    return f, rep


def _pairs(cfg, rng, count, size):
    return [(smooth_perturbation(cfg, rng, size), smooth_perturbation(cfg, rng, size))
            for _ in range(count)]


def scenario_solve(rc, cfg, f0, out) -> int:
    f, rep = _solve_into(out, rc, cfg, f0)
    out.add_moments(f)
    _schedule_snapshots(out, rc, "solution", f)
    out.report["iterations"] = rep.as_dict()
    out.report["final_residual"] = residual(f, f0, cfg)
    return EXIT_PASS if rep.converged else EXIT_INCONCLUSIVE


def scenario_check_kernel(rc, cfg, f0, out) -> int:
    vg = cfg.vgrid
    top = 2.0 * vg.extent * np.sqrt(vg.dim)
    speeds = np.geomspace(vg.spacing / 2, top, rc.experiment["sample_speeds"])
    bounds = check_bounds(cfg.kernel, cfg.sphere, speeds)
    ext = cfg.extend(f0)
    out.add_moments(ext)
    cert = certify_theorem1_hypotheses(cfg.kernel, ext, [], vg, cfg.sphere)
    out.report["bounds"] = bounds._asdict()
    out.report["sample_speeds"] = speeds
    out.report["certification_on_initial_data"] = cert._asdict()
    return EXIT_PASS if bounds.b2_satisfied and bounds.b3_satisfied else EXIT_FAIL


def _certified_setup(rc, cfg, f0, out, rng):
    """Perturbation pairs, reference solution and certificate; ``None`` cfg means hypotheses fail."""
    ex = rc.experiment
    ext = cfg.extend(f0)
    size = ex["relative_size"] * l1_norm(ext)
    pairs = _pairs(cfg, rng, ex["pairs"], size) if size > 0 else []
    gs = [g for p in pairs for g in p]
    if ex["target_L"] > 0:
        cfg, f2, rep, cert = calibrate_strength(f0, cfg, gs, ex["target_L"])
        out.add_iterations(0, rep)
        out.report["calibrated_strength"] = cfg.kernel.strength
        return cfg, f2, rep, cert, pairs
    pre = certify_theorem1_hypotheses(cfg.kernel, ext, gs, cfg.vgrid, cfg.sphere)
    out.report["certification_on_initial_data"] = pre._asdict()
    if not pre.satisfied:
        return None, ext, None, pre, pairs
    f2, rep = _solve_into(out, rc, cfg, f0)
    cert = certify_theorem1_hypotheses(cfg.kernel, f2, gs, cfg.vgrid, cfg.sphere)
    return cfg, f2, rep, cert, pairs


def scenario_contraction(rc, cfg, f0, out) -> int:
    rng = np.random.default_rng(rc.seed)
    cfg, f2, rep, cert, pairs = _certified_setup(rc, cfg, f0, out, rng)
    out.add_moments(f2)
    out.report["certification"] = cert._asdict()
    if cfg is None:
        out.report["reason"] = "certified L >= 1: contraction hypotheses violated"
        return EXIT_FAIL
    out.report["iterations"] = rep.as_dict()
    _schedule_snapshots(out, rc, "reference", f2)
    if not pairs:
        out.report["reason"] = "zero initial data leaves nothing to perturb"
        return EXIT_INCONCLUSIVE
    cr = empirical_contraction(pairs, f2, cfg, cert.L_estimate, rc.experiment["slack"])
    out.report["contraction"] = cr.as_dict()
    if not cert.satisfied:
        out.report["reason"] = "certified L >= 1 on the solution"
        return EXIT_FAIL
    return EXIT_PASS if cr.passed else EXIT_FAIL


def scenario_uniqueness(rc, cfg, f0, out) -> int:
    ex = rc.experiment
    if ex["target_L"] > 0:
        rng = np.random.default_rng(rc.seed)
        cfg, _, _, cert, _ = _certified_setup(rc, cfg, f0, out, rng)
        out.residual_rows.clear()
        out.report["certification"] = cert._asdict()
        if cfg is None or not cert.satisfied:
            out.report["reason"] = "contraction hypotheses not certified"
            return EXIT_INCONCLUSIVE
    rep, sols = uniqueness_experiment(f0, cfg, ex["perturbations"], rc.seed, ex["relative_size"])
    for i, r in enumerate(rep.reports):
        out.add_iterations(i, r)
    out.add_moments(sols[0])
    for i, s in enumerate(sols):
        _schedule_snapshots(out, rc, f"run{i}", s)
    out.report["uniqueness"] = rep.as_dict()
    if not rep.conclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS if rep.passed else EXIT_FAIL


def scenario_renorm_check(rc, cfg, f0, out) -> int:
    b = beta_function(rc)
    rep, (fa, fb) = renorm_uniqueness_experiment(f0, cfg, b, rc.seed, rc.experiment["relative_size"])
    for i, r in enumerate(rep.reports):
        out.add_iterations(i, r)
    out.add_moments(fa)
    _schedule_snapshots(out, rc, "solution", fa)
    res = renorm_residual(fa, b, cfg)
    out.report["beta"] = b.as_dict()
    out.report["beta_admissibility_margin"] = admissibility_margin(b)
    out.report["renormalised_residual"] = {
        "residual_l1": res.residual_l1, "grid_resolution": res.grid_resolution, "clipped": res.clipped}
    out.report["renorm_uniqueness"] = rep.as_dict()
    if not rep.conclusive or not rep.q_ok:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS if rep.passed else EXIT_FAIL


SCENARIO_FUNCS = {
    "solve": scenario_solve,
    "check-kernel": scenario_check_kernel,
    "contraction": scenario_contraction,
    "uniqueness": scenario_uniqueness,
    "renorm-check": scenario_renorm_check,
}


def run(rc: RunConfig) -> int:
    """Execute the configured scenario and write its outputs; returns the exit status."""
    validate(rc)
    cfg = solver_config(rc)
    f0 = initial_slice(rc, cfg)
    out = Outputs(Path(rc.run["output_dir"]))
    settings = rc.as_dict()
    settings["run"].pop("output_dir")
    out.report["config"] = settings
    out.report["scenario"] = rc.scenario
    try:
        code = SCENARIO_FUNCS[rc.scenario](rc, cfg, f0, out)
    except BlowUpError as exc:
        out.report["blow_up"] = {"iterate": exc.iterate, "message": str(exc)}
        print(f"kfix: numerical blow-up at Picard iterate {exc.iterate}", file=sys.stderr)
        code = EXIT_INCONCLUSIVE
    except RuntimeError as exc:
        out.report["error"] = str(exc)
        print(f"kfix: {exc}", file=sys.stderr)
        code = EXIT_INCONCLUSIVE
    out.report["exit_code"] = code
    out.report["status"] = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_INCONCLUSIVE: "inconclusive"}[code]
    out.write(cfg.vgrid.dim)
    return code


def _apply_threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return
    import numba

    numba.set_num_threads(max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS)))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kfix", description=__doc__.split("\n\n")[0])
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--output", type=Path)
    parser.add_argument("--seed", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"kfix: cannot read config {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    try:
        rc = parse_config(text)
        rc.run["scenario"] = args.scenario
        if args.output is not None:
            rc.run["output_dir"] = str(args.output)
        if args.seed is not None:
            rc.run["seed"] = args.seed
        validate(rc)
    except ConfigError as exc:
        print(f"kfix: {args.config}: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    _apply_threads()
    try:
        return run(rc)
    except OSError as exc:
        print(f"kfix: I/O failure on {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
