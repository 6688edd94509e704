import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from kfix.grid import SpatialGrid, build_sphere_quadrature, build_velocity_grid, bump, l1_norm, maxwellian
from kfix.kernel import KernelSpec
from kfix.renorm import (
    SWEEP,
    BetaFunction,
    admissibility_margin,
    beta_eval,
    beta_prime,
    renorm_f_map,
    renorm_residual,
    renorm_uniqueness_experiment,
    theorem2_condition_check,
)
from kfix.solver import SolverConfig, solve, time_integral
from kfix.transport import q_sharp_values
from kfix.uniqueness import f_map, smooth_perturbation


def test_log1p_values():
    b = BetaFunction()
    assert beta_eval(b, 0.0) == 0.0
    assert beta_prime(b, 0.0) == 1.0
    assert beta_eval(b, math.e - 1) == pytest.approx(1.0, rel=1e-15)
    assert b.c == 1.0


@given(st.sampled_from(["log1p", "scaled_log1p", "custom_rational"]), st.floats(0.01, 100), st.floats(-5, 5))
def test_builtin_forms_are_admissible(form, p, shift):
    b = BetaFunction(form, scale=p, kappa=p, shift=shift)
    assert admissibility_margin(b) <= 1.0 + 1e-12
    assert np.all(np.abs(beta_prime(b, SWEEP)) * (1 + SWEEP) <= b.c * (1 + 1e-12))


def test_beta_rejects_inadmissible_constant_and_domain():
    with pytest.raises(ValueError):
        BetaFunction("scaled_log1p", c=1.0, scale=2.0)
    with pytest.raises(ValueError):
        BetaFunction("cubic")
    with pytest.raises(ValueError):
        beta_eval(BetaFunction(), -1.0)


def test_rational_constant_is_sharp():
    b = BetaFunction("custom_rational", kappa=10.0)
    assert admissibility_margin(b) == pytest.approx(1.0, rel=1e-3)


def _cfg2d(n, steps, strength=0.02, sg=None, order=16):
    vg = build_velocity_grid(2, 4.0, n)
    return SolverConfig(vg, build_sphere_quadrature(2, order), KernelSpec(strength=strength), sg,
                        horizon=0.5, time_steps=steps)


def _f0(cfg):
    vg = cfg.vgrid
    v = vg.nodes
    vel = bump(vg, 2.5) * (1 + 0.3 * np.cos(v[:, 0] + 0.5 * v[:, 1])).reshape(vg.shape)
    return np.broadcast_to(vel, cfg.slice_shape).copy()


def test_free_flow_of_uniform_data_has_no_residual():
    cfg = _cfg2d(9, 4, strength=0.0, sg=SpatialGrid(2, 1.0, 4), order=4)
    f, rep = solve(_f0(cfg), cfg)
    assert rep.converged
    assert renorm_residual(f, BetaFunction(), cfg).residual_l1 <= 1e-10


def test_identity_like_residual_shrinks_under_refinement():
    b = BetaFunction("custom_rational", kappa=1e6)
    res = []
    for n, steps in ((9, 4), (17, 8)):
        cfg = _cfg2d(n, steps)
        f, rep = solve(_f0(cfg), cfg)
        assert rep.converged
        res.append(renorm_residual(f, b, cfg).residual_l1)
    assert res[1] <= res[0] / 2


def test_residual_reports_resolution_and_clipping():
    cfg = _cfg2d(9, 2)
    f = cfg.extend(_f0(cfg)) - cfg.extend(np.full(cfg.slice_shape, 1e-3))
    rep = renorm_residual(f, BetaFunction(), cfg)
    assert rep.clipped > 0
    assert rep.grid_resolution == {"dt": 0.25, "dx": None, "dv": 1.0}


def _g(cfg, seed, size=0.05, **kw):
    return smooth_perturbation(cfg, np.random.default_rng(seed), size, **kw)


def test_shifted_beta_is_ordered():
    b2 = BetaFunction()
    b1 = b2.shifted(math.sqrt(b2.c))
    cfg = _cfg2d(9, 2, order=4)
    chk = theorem2_condition_check(b1, b2, _g(cfg, 0), cfg)
    assert chk.ordering_ok
    assert not theorem2_condition_check(b2, b1, _g(cfg, 0), cfg).ordering_ok


def test_zero_perturbation_condition():
    cfg = _cfg2d(9, 2, order=4)
    chk = theorem2_condition_check(BetaFunction(), BetaFunction(), _g(cfg, 0) * 0.0, cfg)
    assert chk.q_integral == 0 and chk.q_ok


def test_q_integral_matches_oracle():
    vg = build_velocity_grid(3, 2.0, 5)
    cfg = SolverConfig(vg, build_sphere_quadrature(3, 4), KernelSpec(), time_steps=2)
    g = _g(cfg, 1, 0.3)
    q = oracles.q_sharp_oracle(g.values, cfg.time_nodes, cfg.kernel, vg, cfg.sgrid, cfg.sphere)
    ref = np.abs(oracles.trapezoid_cumulative(q, cfg.time_nodes)[-1]).sum() * vg.cell_volume
    chk = theorem2_condition_check(BetaFunction(), BetaFunction(), g, cfg)
    assert chk.q_integral == pytest.approx(ref, rel=1e-12)


def test_cross_term_reported():
    cfg = _cfg2d(9, 2, order=4)
    f2 = cfg.extend(_f0(cfg))
    chk = theorem2_condition_check(BetaFunction(), BetaFunction(), _g(cfg, 0), cfg, f2=f2)
    assert chk.cross_term is not None and chk.cross_term > 0


def test_renorm_map_of_zero_perturbation():
    cfg = _cfg2d(9, 2, order=4)
    f2 = cfg.extend(_f0(cfg))
    assert not np.any(renorm_f_map(f2 * 0.0, f2, BetaFunction(), cfg).values)


def test_unit_slope_beta_reduces_to_plain_map():
    cfg = _cfg2d(9, 2, order=4)
    f2 = cfg.extend(_f0(cfg))
    g = _g(cfg, 3, vanish_at_zero=True)
    b = BetaFunction("custom_rational", kappa=1e9)
    np.testing.assert_allclose(renorm_f_map(g, f2, b, cfg).values, f_map(g, f2, cfg).values,
                               rtol=1e-7, atol=1e-9 * np.abs(f_map(g, f2, cfg).values).max())


@pytest.mark.parametrize("space_nodes", [1, 4])
def test_renorm_map_matches_oracle(space_nodes, rng):
    vg = build_velocity_grid(2, 2.0, 5)
    sg = SpatialGrid(2, 1.0, space_nodes)
    cfg = SolverConfig(vg, build_sphere_quadrature(2, 6), KernelSpec("maxwell", 0.4), sg, horizon=0.3, time_steps=2)
    f2 = cfg.field(rng.random((3,) + cfg.slice_shape))
    g = cfg.field(0.3 * rng.normal(size=(3,) + cfg.slice_shape))
    ref = oracles.renorm_f_map_oracle(g.values, f2.values, cfg.time_nodes, cfg.kernel, vg, sg, cfg.sphere)
    assert oracles.rel_l1(renorm_f_map(g, f2, BetaFunction(), cfg).values, ref) <= 1e-11


def test_vacuum_renorm_runs_identical():
    cfg = _cfg2d(9, 2, order=4)
    rep, (fa, fb) = renorm_uniqueness_experiment(np.zeros(cfg.slice_shape), cfg, BetaFunction())
    assert rep.passed and rep.beta_distance == 0
    assert not np.any(fa.values) and not np.any(fb.values)


def test_perturbed_renorm_runs_agree():
    cfg = _cfg2d(9, 4, order=8)
    rep, (fa, fb) = renorm_uniqueness_experiment(_f0(cfg), cfg, BetaFunction(), seed=1)
    assert rep.conclusive and rep.q_ok
    assert rep.beta_distance <= 10 * cfg.residual_tol
    assert rep.beta_distance <= rep.raw_distance
