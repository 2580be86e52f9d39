"""Configuration and result types shared by the solvers and the harness."""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from tvgsr.temporal import default_band

FIDELITIES = ("least_squares", "l1")
WEIGHT_MODES = ("erf_reweighted", "constant_ones", "none")
LINEAR_SOLVERS = ("auto", "direct", "dense", "cg", "direct_cholesky", "kronecker_cg")
RHO_MODES = ("fixed", "lipschitz")


class DivergenceError(RuntimeError):
    """An iterate became non-finite."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class ConvergenceError(RuntimeError):
    """Conjugate gradient stopped before reaching its tolerance."""

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"CG did not converge in {iterations} iterations "
                         f"(relative residual {residual:.3e})")


@dataclass(frozen=True)
class ModelConfig:
    """Every knob of the unified recovery model.

    ``theta = 0`` means no temporal difference (``D = I``).  ``epsilon = 0``
    with ``order_r = 1`` uses the plain Laplacian.  ``weight_mode`` must be
    ``"none"`` exactly when ``beta == 0``.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    theta: float = 1.8
    frac_k: int | None = None
    tau: int = 1
    epsilon: float = 0.1
    order_r: float = 3.0
    sigma_erf: float = 1e3
    fidelity: str = "least_squares"
    weight_mode: str = "none"
    name: str = "custom"

    def __post_init__(self):
        for attr in ("alpha", "beta", "gamma", "theta", "epsilon"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{attr} must be nonnegative")
        if self.order_r < 1:
            raise ValueError("order_r must be >= 1")
        if self.sigma_erf <= 0:
            raise ValueError("sigma_erf must be positive")
        if int(self.tau) < 1:
            raise ValueError("tau must be >= 1")
        if self.fidelity not in FIDELITIES:
            raise ValueError(f"unknown fidelity {self.fidelity!r}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"unknown weight_mode {self.weight_mode!r}")
        if (self.weight_mode == "none") != (self.beta == 0):
            raise ValueError("weight_mode must be 'none' exactly when beta == 0")

    @property
    def band(self):
        """Band width of the temporal difference (0 when ``theta == 0``)."""
        if self.theta == 0:
            return 0
        return default_band(self.theta, self.frac_k)

    def tuned(self, alpha, beta):
        """Copy with new ``(alpha, beta)``; the weight mode follows ``beta``."""
        if beta == 0:
            mode = "none"
        elif self.weight_mode != "none":
            mode = self.weight_mode
        else:
            mode = NATIVE_WEIGHT_MODE.get(self.name, "none")
            if mode == "none":
                raise ValueError(f"method {self.name!r} has no low-rank term; beta must stay 0")
        return replace(self, alpha=float(alpha), beta=float(beta), weight_mode=mode)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ObservationSet:
    """Observed matrix ``Y = J o (X + noise)`` with its 0/1 mask.

    ``valid`` marks entries that carry ground truth (``False`` where the
    source had gaps); it defaults to everything.
    """

    Y: np.ndarray
    J: np.ndarray
    ground_truth: np.ndarray | None = None
    valid: np.ndarray | None = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        J = np.asarray(self.J)
        if Y.ndim != 2 or Y.shape != J.shape:
            raise ValueError(f"Y {Y.shape} and J {J.shape} must be equal-shape matrices")
        if not np.all((J == 0) | (J == 1)):
            raise ValueError("mask entries must be 0 or 1")
        J = J.astype(float)
        if np.any(Y[J == 0] != 0):
            raise ValueError("unobserved entries of Y must be stored as zero")
        if not np.all(np.isfinite(Y)):
            raise ValueError("Y must be finite")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "J", J)
        if self.ground_truth is not None:
            X = np.asarray(self.ground_truth, dtype=float)
            if X.shape != Y.shape:
                raise ValueError("ground truth shape differs from Y")
            object.__setattr__(self, "ground_truth", X)
        if self.valid is not None:
            v = np.asarray(self.valid, dtype=bool)
            if v.shape != Y.shape:
                raise ValueError("valid mask shape differs from Y")
            object.__setattr__(self, "valid", v)

    @property
    def shape(self):
        return self.Y.shape


@dataclass(frozen=True)
class SolverOptions:
    """ADMM and linear-solver settings.

    ``rho_mode="lipschitz"`` replaces ``rho`` by ``1.01 *`` the Lipschitz
    estimate of the smooth part, the regime with a convergence guarantee.
    ``rho1``/``rho2`` default to ``rho``.
    """

    rho: float = 1e-6
    rho1: float | None = None
    rho2: float | None = None
    rho_mode: str = "fixed"
    max_iters: int = 2000
    primal_tol: float = 1e-6
    linear_solver: str = "auto"
    cg_tol: float = 1e-10
    cg_max_iters: int = 2000
    seed: int = 0
    record_diagnostics: bool = True

    def __post_init__(self):
        for attr in ("rho", "primal_tol", "cg_tol"):
            if getattr(self, attr) <= 0:
                raise ValueError(f"{attr} must be positive")
        for attr in ("rho1", "rho2"):
            v = getattr(self, attr)
            if v is not None and v <= 0:
                raise ValueError(f"{attr} must be positive")
        if self.rho_mode not in RHO_MODES:
            raise ValueError(f"unknown rho_mode {self.rho_mode!r}")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ValueError(f"unknown linear_solver {self.linear_solver!r}")
        if self.max_iters < 1 or self.cg_max_iters < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    lagrangian: float
    primal_residual: float
    x_change: float
    elapsed: float
    fidelity_residual: float | None = None


@dataclass
class RecoveryResult:
    X_hat: np.ndarray
    iterations: int
    converged: bool
    diagnostics: list = field(default_factory=list)
    rho: float | None = None
    Z: np.ndarray | None = None
    Z_dual: np.ndarray | None = None


# Named members of the model family.  "fixed" fields are method identity,
# alpha/beta are the tuned pair.
_BASELINES = {
    "GS": dict(theta=0.0, gamma=0.0, epsilon=0.0, order_r=1.0),
    "Tikhonov": dict(theta=0.0, gamma=1.0, tau=1, epsilon=0.0, order_r=1.0),
    "TGSR": dict(theta=1.0, gamma=0.0, epsilon=0.0, order_r=1.0),
    "LRDS": dict(theta=1.0, gamma=0.0, epsilon=0.0, order_r=1.0),
    "Sobolev": dict(theta=1.0, gamma=0.0, epsilon=0.1, order_r=3.0),
    "LRGTS": dict(theta=0.0, gamma=1.0, tau=2, epsilon=0.0, order_r=1.0),
    "ProposedL2": dict(theta=1.8, frac_k=3, gamma=0.0, epsilon=0.1, order_r=3.0,
                       sigma_erf=1e3, fidelity="least_squares"),
    "ProposedL1": dict(theta=1.8, frac_k=3, gamma=0.0, epsilon=0.1, order_r=3.0,
                       sigma_erf=1e3, fidelity="l1"),
}

NATIVE_WEIGHT_MODE = {
    "GS": "none",
    "Tikhonov": "none",
    "TGSR": "none",
    "LRDS": "constant_ones",
    "Sobolev": "none",
    "LRGTS": "constant_ones",
    "ProposedL2": "erf_reweighted",
    "ProposedL1": "erf_reweighted",
}

BASELINE_NAMES = tuple(_BASELINES)


def has_lowrank_term(name):
    return NATIVE_WEIGHT_MODE[name] != "none"


def baseline_config(name, alpha=0.1, beta=None, **overrides):
    """Model configuration reproducing a named method.

    ``beta`` defaults to ``1e-6`` for methods with a low-rank term and is
    forced to ``0`` otherwise.  ``overrides`` replace any other field.
    """
    if name not in _BASELINES:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(BASELINE_NAMES)}")
    native = NATIVE_WEIGHT_MODE[name]
    if native == "none":
        if beta:
            raise ValueError(f"{name} has no low-rank term; beta must be 0")
        beta = 0.0
    elif beta is None:
        beta = 1e-6
    params = dict(_BASELINES[name])
    params.update(overrides)
    mode = native if beta > 0 else "none"
    return ModelConfig(alpha=float(alpha), beta=float(beta), weight_mode=mode, name=name, **params)
