"""Discrete-velocity Boltzmann solver built on the mild (characteristic) formulation."""
from .collision import CollisionResult, conservation_defect, q_bilinear, q_quadratic
from .config import ConfigError, RunConfig, parse_config
from .grid import (
    DistributionField,
    SpatialGrid,
    SphereQuadrature,
    VelocityGrid,
    build_sphere_quadrature,
    build_velocity_grid,
    bump,
    compute_moments,
    l1_norm,
    maxwellian,
)
from .kernel import KernelSpec, certify_theorem1_hypotheses, check_bounds, hypothesis_integral
from .renorm import (
    BetaFunction,
    renorm_f_map,
    renorm_residual,
    renorm_uniqueness_experiment,
    theorem2_condition_check,
)
from .snapshot import read_snapshot, write_snapshot
from .solver import BlowUpError, IterationReport, SolverConfig, picard_step, residual, solve
from .transport import q_sharp, sharp, unsharp
from .uniqueness import (
    bilinear_difference_identity_check,
    calibrate_strength,
    empirical_contraction,
    f_map,
    uniqueness_experiment,
)

__version__ = "0.1.0"
