"""Time-varying graph signal recovery with high-order smoothness and ERF low-rank regularization."""

from tvgsr.datasets import DatasetBundle, load_bundle, make_observation, save_bundle
from tvgsr.graph import (
    LaplacianSpec,
    SpatialGraph,
    build_knn_graph,
    laplacian,
    pseudo_inverse_sqrt,
    sobolev_transform,
)
from tvgsr.lowrank import erf_norm, erf_weights, nuclear_norm, shrink, weighted_svt
from tvgsr.models import (
    BASELINE_NAMES,
    ConvergenceError,
    DivergenceError,
    ModelConfig,
    ObservationSet,
    RecoveryResult,
    SolverOptions,
    baseline_config,
)
from tvgsr.operators import SmoothnessOperator, build_operator, smooth_matvec, solve_x_subproblem
from tvgsr.solver import (
    admm_l1,
    admm_l2,
    augmented_lagrangian,
    lipschitz_estimate,
    objective_value,
    recover,
    solve_quadratic,
)
from tvgsr.synth import (
    NoiseSpec,
    SyntheticSpec,
    add_noise,
    generate_signal,
    make_synthetic,
    sample_mask,
)
from tvgsr.temporal import build_difference_matrix, gl_coefficients, temporal_laplacian

from tvgsr.harness import ExperimentPlan, MethodSpec, grid_search, rmse, run_plan  # noqa: E402

__version__ = "0.1.0"
