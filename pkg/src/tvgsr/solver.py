"""Quadratic baseline solver and the two ADMM recovery algorithms."""

import time

import numpy as np

from tvgsr.lowrank import erf_integral, erf_weights, shrink, singular_values, weighted_svt_full
from tvgsr.models import (
    DivergenceError,
    IterationRecord,
    RecoveryResult,
    SolverOptions,
)
from tvgsr.operators import (
    SmoothnessOperator,
    XSystem,
    build_operator,
    smooth_matvec,
    smoothness_value,
    temporal_value,
    apply_temporal,
)


def _operator(laplacian, obs, config):
    if isinstance(laplacian, SmoothnessOperator):
        if laplacian.shape != obs.shape:
            raise ValueError(f"operator shape {laplacian.shape} does not match data {obs.shape}")
        return laplacian
    L = np.asarray(laplacian, dtype=float)
    if L.shape != (obs.shape[0], obs.shape[0]):
        raise ValueError(f"Laplacian shape {L.shape} does not match {obs.shape[0]} nodes")
    return build_operator(L, obs.shape[1], config)


def lowrank_penalty(config, spectrum):
    """``R`` evaluated from singular values: ERF norm, nuclear norm or 0."""
    if config.weight_mode == "erf_reweighted":
        return float(np.sum(erf_integral(spectrum, config.sigma_erf)))
    if config.weight_mode == "constant_ones":
        return float(np.sum(spectrum))
    return 0.0


def smooth_part(X, obs, op, config):
    """Smooth part ``f`` of the model (least-squares fidelity plus quadratic regularizers)."""
    r = obs.Y - obs.J * X
    val = 0.5 * float(np.sum(r * r))
    if config.alpha:
        val += 0.5 * config.alpha * smoothness_value(op, X)
    if config.gamma:
        val += 0.5 * config.gamma * temporal_value(op, X)
    return val


def gradient(X, obs, op, config):
    """Gradient of :func:`smooth_part`: ``J o X - Y + alpha Ls X D D^T + gamma X Lt``."""
    g = obs.J * X - obs.Y
    if config.alpha:
        g = g + config.alpha * smooth_matvec(op, X)
    if config.gamma and op.Lt is not None:
        g = g + config.gamma * apply_temporal(np.ascontiguousarray(X), op.tau_coeffs)
    return g


def objective_value(X, obs, laplacian, config, spectrum=None):
    """Full model objective at ``X``; ``l1`` fidelity uses ``||Y - J o X||_1``."""
    op = _operator(laplacian, obs, config)
    if config.fidelity == "l1":
        val = float(np.sum(np.abs(obs.Y - obs.J * X)))
        if config.alpha:
            val += 0.5 * config.alpha * smoothness_value(op, X)
        if config.gamma:
            val += 0.5 * config.gamma * temporal_value(op, X)
    else:
        val = smooth_part(X, obs, op, config)
    if config.beta:
        s = singular_values(X) if spectrum is None else spectrum
        val += config.beta * lowrank_penalty(config, s)
    return val


def augmented_lagrangian(X, Z, Z_dual, obs, laplacian, config, rho, z_spectrum=None):
    """``f(X) + beta R(Z) + rho <Zh, X - Z> + rho/2 ||X - Z||^2``."""
    op = _operator(laplacian, obs, config)
    diff = X - Z
    val = smooth_part(X, obs, op, config)
    if config.beta:
        s = singular_values(Z) if z_spectrum is None else z_spectrum
        val += config.beta * lowrank_penalty(config, s)
    return val + rho * float(np.sum(Z_dual * diff)) + 0.5 * rho * float(np.sum(diff * diff))


def lipschitz_estimate(obs, laplacian, alpha, gamma=0.0, config=None):
    """Upper bound ``1 + alpha lmax(DD^T) lmax(Ls) + gamma lmax(Lt)`` on the Hessian norm of ``f``.

    ``laplacian`` may be a built operator; a raw Laplacian needs ``config``.
    """
    if isinstance(laplacian, SmoothnessOperator):
        op = laplacian
    else:
        if config is None:
            raise ValueError("a raw Laplacian needs the model config to build the operator")
        op = _operator(laplacian, obs, config)
    est = 1.0
    if alpha:
        est += alpha * np.linalg.eigvalsh(op.DDt)[-1] * np.linalg.eigvalsh(op.full_power)[-1]
    if gamma and op.Lt is not None:
        est += gamma * np.linalg.eigvalsh(op.Lt)[-1]
    return float(est)


def _lowrank_weights(config, X, spectrum=None):
    p = min(X.shape)
    if config.weight_mode == "constant_ones":
        return np.ones(p), spectrum
    if spectrum is None:
        spectrum = singular_values(X)
    return erf_weights(spectrum, config.sigma_erf), spectrum


def _rel(num, den):
    return num / max(1.0, den)


def _check_finite(k, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(k)


def _resolve_rho(options, obs, op, config):
    if options.rho_mode == "lipschitz":
        return 1.01 * lipschitz_estimate(obs, op, config.alpha, config.gamma)
    return options.rho


def solve_quadratic(obs, laplacian, config, options=None):
    """Closed-form solve of the ``beta = 0`` least-squares model.

    Solves ``(J + alpha (DD^T kron Ls) + gamma (Lt kron I)) vec(X) = vec(Y)``.
    """
    options = options or SolverOptions()
    if config.beta != 0:
        raise ValueError("solve_quadratic needs beta == 0")
    if config.fidelity != "least_squares":
        raise ValueError("solve_quadratic needs least-squares fidelity")
    if config.alpha == 0 and config.gamma == 0 and np.any(obs.J == 0):
        raise ValueError("singular system: alpha = gamma = 0 with unobserved entries")
    op = _operator(laplacian, obs, config)
    t0 = time.perf_counter()
    system = XSystem(obs.J, op, config.alpha, 0.0, gamma=config.gamma,
                     method=options.linear_solver, cg_tol=options.cg_tol,
                     cg_max_iters=options.cg_max_iters)
    X = system.solve(obs.J * obs.Y)
    _check_finite(1, X)
    diag = []
    if options.record_diagnostics:
        obj = smooth_part(X, obs, op, config)
        diag.append(IterationRecord(1, obj, obj, 0.0, 0.0, time.perf_counter() - t0))
    return RecoveryResult(X_hat=X, iterations=1, converged=True, diagnostics=diag)


def admm_l2(obs, laplacian, config, options=None, callback=None):
    """ADMM with iterative ERF reweighting for the least-squares model.

    Each iteration: weights from the spectrum of the current ``X``, weighted
    SVT for ``Z``, one structured linear solve for ``X``, dual ascent on
    ``Zh``.  Starts from ``X = Z = Y`` and ``Zh = 0``.  ``callback(k, X, Z,
    Zh)`` runs after every iteration.
    """
    options = options or SolverOptions()
    if config.fidelity != "least_squares":
        raise ValueError("admm_l2 needs least-squares fidelity; use admm_l1")
    op = _operator(laplacian, obs, config)
    rho = _resolve_rho(options, obs, op, config)
    system = XSystem(obs.J, op, config.alpha, rho, gamma=config.gamma,
                     method=options.linear_solver, cg_tol=options.cg_tol,
                     cg_max_iters=options.cg_max_iters)
    JY = obs.J * obs.Y
    X = obs.Y.copy()
    Z = X.copy()
    Zh = np.zeros_like(X)
    x_spec = None
    beta = config.beta
    diag = []
    t0 = time.perf_counter()
    converged = False
    k = 0
    for k in range(1, options.max_iters + 1):
        if beta:
            w, x_spec = _lowrank_weights(config, X, x_spec)
            Z, z_spec = weighted_svt_full(X + Zh, beta * w / rho)
        else:
            Z, z_spec = X + Zh, None
        X_new = system.solve(JY + rho * (Z - Zh), x0=X)
        Zh += X_new - Z
        _check_finite(k, X_new, Zh)

        res = np.linalg.norm(X_new - Z)
        change = np.linalg.norm(X_new - X)
        xnorm = np.linalg.norm(X)
        X = X_new
        x_spec = None
        if options.record_diagnostics:
            if beta:
                x_spec = singular_values(X)
            obj = objective_value(X, obs, op, config, spectrum=x_spec)
            lag = augmented_lagrangian(X, Z, Zh, obs, op, config, rho, z_spectrum=z_spec)
            diag.append(IterationRecord(k, obj, lag, float(res), float(change),
                                        time.perf_counter() - t0))
        if callback is not None:
            callback(k, X, Z, Zh)
        if max(_rel(res, np.linalg.norm(X)), _rel(change, xnorm)) < options.primal_tol:
            converged = True
            break
    return RecoveryResult(X_hat=X, iterations=k, converged=converged, diagnostics=diag,
                          rho=rho, Z=Z, Z_dual=Zh)


def admm_l1(obs, laplacian, config, options=None, callback=None):
    """ADMM for the ``l1``-fidelity model with splitting ``V = J o X - Y`` and ``Z = X``.

    ``V`` and its dual live on the mask support.
    """
    options = options or SolverOptions()
    if config.fidelity != "l1":
        raise ValueError("admm_l1 needs l1 fidelity; use admm_l2")
    op = _operator(laplacian, obs, config)
    if options.rho_mode == "lipschitz":
        rho1 = rho2 = _resolve_rho(options, obs, op, config)
    else:
        rho1 = options.rho1 if options.rho1 is not None else options.rho
        rho2 = options.rho2 if options.rho2 is not None else options.rho
    system = XSystem(obs.J, op, config.alpha, rho2, gamma=config.gamma, data_weight=rho1,
                     method=options.linear_solver, cg_tol=options.cg_tol,
                     cg_max_iters=options.cg_max_iters)
    J, Y = obs.J, obs.Y
    X = Y.copy()
    Z = X.copy()
    Zh = np.zeros_like(X)
    V = np.zeros_like(X)
    Vh = np.zeros_like(X)
    beta = config.beta
    diag = []
    t0 = time.perf_counter()
    converged = False
    k = 0
    for k in range(1, options.max_iters + 1):
        V = J * shrink(J * X - Y + Vh, 1.0 / rho1)
        if beta:
            w, _ = _lowrank_weights(config, X)
            Z, z_spec = weighted_svt_full(X + Zh, beta * w / rho2)
        else:
            Z, z_spec = X + Zh, None
        rhs = rho1 * J * (Y + V - Vh) + rho2 * (Z - Zh)
        X_new = system.solve(rhs, x0=X)
        fid = J * X_new - Y - V
        Vh += fid
        Zh += X_new - Z
        _check_finite(k, X_new, Zh, Vh)

        res = np.linalg.norm(X_new - Z)
        fres = np.linalg.norm(fid)
        change = np.linalg.norm(X_new - X)
        xnorm = np.linalg.norm(X)
        X = X_new
        if options.record_diagnostics:
            obj = objective_value(X, obs, op, config)
            diff = X - Z
            lag = float(np.sum(np.abs(V)))
            if config.alpha:
                lag += 0.5 * config.alpha * smoothness_value(op, X)
            if config.gamma:
                lag += 0.5 * config.gamma * temporal_value(op, X)
            if beta:
                lag += beta * lowrank_penalty(config, z_spec)
            lag += rho1 * float(np.sum(Vh * fid)) + 0.5 * rho1 * float(np.sum(fid * fid))
            lag += rho2 * float(np.sum(Zh * diff)) + 0.5 * rho2 * float(np.sum(diff * diff))
            diag.append(IterationRecord(k, obj, lag, float(res), float(change),
                                        time.perf_counter() - t0, float(fres)))
        if callback is not None:
            callback(k, X, Z, Zh)
        ynorm = np.linalg.norm(X)
        if max(_rel(res, ynorm), _rel(fres, ynorm), _rel(change, xnorm)) < options.primal_tol:
            converged = True
            break
    return RecoveryResult(X_hat=X, iterations=k, converged=converged, diagnostics=diag,
                          rho=rho2, Z=Z, Z_dual=Zh)


def recover(obs, laplacian, config, options=None):
    """Dispatch to the solver matching ``config``."""
    if config.fidelity == "l1":
        return admm_l1(obs, laplacian, config, options)
    if config.beta == 0:
        return solve_quadratic(obs, laplacian, config, options)
    return admm_l2(obs, laplacian, config, options)
