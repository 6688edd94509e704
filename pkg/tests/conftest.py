import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kfix import KernelSpec, SolverConfig, build_sphere_quadrature, build_velocity_grid

warnings.filterwarnings("ignore", message=".*TBB.*")

settings.register_profile(
    "kfix", deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("kfix")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: refinement studies taking tens of seconds")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small3d():
    vg = build_velocity_grid(3, 2.0, 5)
    return vg, build_sphere_quadrature(3, 4)


@pytest.fixture(scope="session")
def small2d():
    vg = build_velocity_grid(2, 2.0, 5)
    return vg, build_sphere_quadrature(2, 6)


def homogeneous_cfg(dim=3, n=5, extent=2.0, order=4, strength=1.0, **kw):
    vg = build_velocity_grid(dim, extent, n)
    return SolverConfig(vg, build_sphere_quadrature(dim, order), KernelSpec(strength=strength), **kw)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
