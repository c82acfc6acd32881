"""Nonlocal slow/fast host-vector model: operators, integrators and verification studies."""

from .analysis import (
    EtaTrace,
    StudyReport,
    compute_constants,
    convergence_study,
    decay_study,
    eta_trace,
    fit_order,
    stability_probe,
)
from .errors import ContractionViolation, ConfigurationError, ResolutionError, StepFailure
from .grid import Field, Grid, build_grid, gradient, h1_seminorm, integrate, l2_norm
from .integrator import (
    SystemState,
    Trajectory,
    solve_full,
    solve_limit,
    step_full,
    step_limit,
    step_size_audit,
)
from .kernels import Kernel, boundary_mass, make_kernel, validate_kernel
from .model import (
    GeneralFG,
    GeneralModel,
    RossMacdonaldParams,
    check_hypotheses,
    equilibria,
    f_host,
    g_vector,
    slow_manifold,
    slow_manifold_deriv,
)
from .operators import (
    NeumannLaplacian,
    NonlocalOperator,
    SpatialOperators,
    apply_laplacian,
    apply_nonlocal,
    build_operators,
    pairing,
)

__all__ = [
    "EtaTrace",
    "GeneralFG",
    "GeneralModel",
    "NeumannLaplacian",
    "NonlocalOperator",
    "RossMacdonaldParams",
    "SpatialOperators",
    "StudyReport",
    "SystemState",
    "Trajectory",
    "apply_laplacian",
    "apply_nonlocal",
    "build_operators",
    "check_hypotheses",
    "compute_constants",
    "convergence_study",
    "decay_study",
    "equilibria",
    "eta_trace",
    "f_host",
    "fit_order",
    "g_vector",
    "pairing",
    "slow_manifold",
    "slow_manifold_deriv",
    "solve_full",
    "solve_limit",
    "stability_probe",
    "step_full",
    "step_limit",
    "step_size_audit",
]
