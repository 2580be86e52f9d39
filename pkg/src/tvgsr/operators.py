"""Kronecker-structured smoothness operator and the X-subproblem linear system.

With ``vec`` stacking columns, the smoothness term
``tr(D^T X^T Ls X D)`` is ``||A vec(X)||^2`` for
``A = D^T kron Ls^{1/2}``, so ``A^T A vec(X) = vec(Ls X D D^T)``.  The
system ``w J + alpha A^T A + gamma (Lt kron I) + rho I`` is block banded in
time with half-bandwidth ``n * (b + 1) - 1`` where ``b`` is the temporal
band, which is what makes a one-off Cholesky factorization affordable.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from tvgsr import _accel
from tvgsr.graph import sobolev_transform
from tvgsr.models import ConvergenceError
from tvgsr.temporal import gl_coefficients, toeplitz_lower

# banded factor storage above this many doubles falls back to CG under "auto"
AUTO_BANDED_LIMIT = 25_000_000

_SOLVER_ALIASES = {"direct_cholesky": "direct", "kronecker_cg": "cg"}


@dataclass(frozen=True)
class SmoothnessOperator:
    """Spatial power ``Ls = (L + eps I)^r`` with its square root, and the temporal band.

    ``coeffs`` is the first column of the lower-triangular Toeplitz ``D``;
    ``tau_coeffs`` does the same for the temporal Laplacian ``Lt`` (empty
    when unused).
    """

    full_power: np.ndarray
    half_power: np.ndarray
    coeffs: np.ndarray
    D: np.ndarray
    DDt: np.ndarray
    tau_coeffs: np.ndarray
    Lt: np.ndarray | None = None

    @property
    def shape(self):
        return self.full_power.shape[0], self.D.shape[0]

    @property
    def band(self):
        b = len(self.coeffs) - 1
        if self.Lt is not None:
            b = max(b, len(self.tau_coeffs) - 1)
        return b


def build_operator(L, m, config):
    """Operator for the spatial Laplacian ``L`` and ``m`` time steps under ``config``."""
    L = np.asarray(L, dtype=float)
    full, half = sobolev_transform(L, config.epsilon, config.order_r, half=True)
    if config.theta == 0:
        coeffs = np.ones(1)
    else:
        band = config.band
        if m <= band:
            raise ValueError(f"m={m} must exceed the temporal band width {band}")
        coeffs = gl_coefficients(config.theta, band)
    D = toeplitz_lower(m, coeffs)
    Lt = None
    tau_coeffs = np.zeros(0)
    if config.gamma > 0:
        tau = int(config.tau)
        if m <= tau:
            raise ValueError(f"m={m} must exceed tau={tau}")
        tau_coeffs = gl_coefficients(tau, tau)
        Dt = toeplitz_lower(m, tau_coeffs)
        Lt = Dt @ Dt.T
    return SmoothnessOperator(full_power=full, half_power=half, coeffs=coeffs, D=D,
                              DDt=D @ D.T, tau_coeffs=tau_coeffs, Lt=Lt)


def apply_temporal(X, coeffs):
    """``X @ D @ D.T`` for the banded Toeplitz ``D`` with first column ``coeffs``."""
    return _accel.band_right_t(_accel.band_right(X, coeffs), coeffs)


def smooth_matvec(op, X):
    """``Ls X D D^T``: the action of ``A^T A`` on ``vec(X)``, reshaped."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.shape != op.shape:
        raise ValueError(f"X has shape {X.shape}, operator expects {op.shape}")
    return op.full_power @ apply_temporal(X, op.coeffs)


def smoothness_value(op, X):
    """``tr(D^T X^T Ls X D)`` evaluated as ``<Ls XD, XD>``."""
    XD = _accel.band_right(np.ascontiguousarray(X, dtype=float), op.coeffs)
    return float(np.sum((op.full_power @ XD) * XD))


def temporal_value(op, X):
    """``||X D_tau||_F^2`` (0 when the operator has no temporal Laplacian)."""
    if op.Lt is None:
        return 0.0
    XD = _accel.band_right(np.ascontiguousarray(X, dtype=float), op.tau_coeffs)
    return float(np.sum(XD * XD))


def vec(X):
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, shape):
    return np.asarray(v).reshape(shape, order="F")


def conjugate_gradient(matvec, b, x0=None, tol=1e-10, max_iters=1000, precond=None):
    """Preconditioned CG on matrices; stops when ``||r|| <= tol * ||b||``.

    Returns ``(x, iterations)``; raises :class:`ConvergenceError` otherwise.
    """
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x)
    rel = np.linalg.norm(r) / bnorm
    if rel <= tol:
        return x, 0
    z = r if precond is None else precond(r)
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, max_iters + 1):
        Ap = matvec(p)
        step = rz / np.vdot(p, Ap)
        x += step * p
        r -= step * Ap
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            return x, it
        z = r if precond is None else precond(r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(rel, max_iters)


class XSystem:
    """``data_weight * J + alpha A^T A + gamma (Lt kron I) + rho I`` acting on n x m matrices.

    ``method`` is ``"direct"`` (banded Cholesky, factored once), ``"dense"``
    (explicit nm x nm Cholesky), ``"cg"`` (Jacobi-preconditioned CG on the
    structured matvec) or ``"auto"``.
    """

    def __init__(self, J, op, alpha, rho, gamma=0.0, data_weight=1.0, method="auto",
                 cg_tol=1e-10, cg_max_iters=2000):
        self.J = np.asarray(J, dtype=float)
        if self.J.shape != op.shape:
            raise ValueError(f"mask shape {self.J.shape} does not match operator {op.shape}")
        self.op = op
        self.alpha = float(alpha)
        self.gamma = float(gamma) if op.Lt is not None else 0.0
        self.rho = float(rho)
        self.data_weight = float(data_weight)
        self.cg_tol = cg_tol
        self.cg_max_iters = cg_max_iters
        self.last_cg_iters = 0
        method = _SOLVER_ALIASES.get(method, method)
        if method == "auto":
            n, m = op.shape
            u = n * (op.band + 1)
            method = "direct" if u * n * m <= AUTO_BANDED_LIMIT else "cg"
        if method not in ("direct", "dense", "cg"):
            raise ValueError(f"unknown linear solver {method!r}")
        self.method = method
        self._factor = None
        if method == "direct":
            self._factor_banded()
        elif method == "dense":
            self._factor_dense()
        else:
            self._diag = vec(self._diagonal())

    def _time_matrices(self):
        m = self.op.shape[1]
        Tc = self.alpha * self.op.DDt
        Tg = self.gamma * self.op.Lt if self.gamma > 0 else np.zeros((m, m))
        return Tc, Tg

    def _diagonal(self):
        op = self.op
        d = self.data_weight * self.J + self.rho
        d = d + self.alpha * np.outer(np.diag(op.full_power), np.diag(op.DDt))
        if self.gamma > 0:
            d = d + self.gamma * np.diag(op.Lt)[None, :]
        return d

    def _factor_banded(self):
        Tc, Tg = self._time_matrices()
        d = vec(self.data_weight * self.J + self.rho)
        ab = _accel.assemble_banded(np.ascontiguousarray(self.op.full_power), Tc, Tg,
                                    d, self.op.band)
        try:
            self._factor = sla.cholesky_banded(ab, lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ValueError("X-subproblem system is singular (not positive definite)") from exc

    def dense_matrix(self):
        Tc, Tg = self._time_matrices()
        n = self.op.shape[0]
        S = np.kron(Tc, self.op.full_power) + np.kron(Tg, np.eye(n))
        S[np.diag_indices_from(S)] += vec(self.data_weight * self.J + self.rho)
        return S

    def _factor_dense(self):
        try:
            self._factor = sla.cho_factor(self.dense_matrix(), lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ValueError("X-subproblem system is singular (not positive definite)") from exc

    def matvec(self, V):
        out = (self.data_weight * self.J + self.rho) * V
        if self.alpha:
            out += self.alpha * smooth_matvec(self.op, V)
        if self.gamma:
            out += self.gamma * apply_temporal(np.ascontiguousarray(V), self.op.tau_coeffs)
        return out

    def solve(self, rhs, x0=None):
        rhs = np.asarray(rhs, dtype=float)
        shape = self.op.shape
        if self.method == "direct":
            x = sla.cho_solve_banded((self._factor, False), vec(rhs), check_finite=False)
            return unvec(x, shape)
        if self.method == "dense":
            return unvec(sla.cho_solve(self._factor, vec(rhs), check_finite=False), shape)
        diag = self._diag.reshape(shape, order="F")
        x, its = conjugate_gradient(self.matvec, rhs, x0=x0, tol=self.cg_tol,
                                    max_iters=self.cg_max_iters, precond=lambda r: r / diag)
        self.last_cg_iters = its
        return x


def solve_x_subproblem(obs, op, alpha, rho, rhs_target, options=None, gamma=0.0, x0=None):
    """Solve ``(J + alpha A^T A + rho I) vec(X) = vec(J o Y) + rho vec(target)``."""
    method = options.linear_solver if options is not None else "auto"
    cg_tol = options.cg_tol if options is not None else 1e-10
    cg_max = options.cg_max_iters if options is not None else 2000
    system = XSystem(obs.J, op, alpha, rho, gamma=gamma, method=method,
                     cg_tol=cg_tol, cg_max_iters=cg_max)
    return system.solve(obs.J * obs.Y + rho * np.asarray(rhs_target, dtype=float), x0=x0)
