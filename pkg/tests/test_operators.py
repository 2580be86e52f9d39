import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_laplacian
from tvgsr.models import ConvergenceError, ModelConfig, ObservationSet, SolverOptions
from tvgsr.operators import (
    XSystem,
    build_operator,
    conjugate_gradient,
    smooth_matvec,
    smoothness_value,
    solve_x_subproblem,
    unvec,
    vec,
)


def cfg(theta=1.8, eps=0.1, r=3.0, gamma=0.0, tau=1):
    return ModelConfig(theta=theta, epsilon=eps, order_r=r, gamma=gamma, tau=tau)


def observation(n, m, seed, rate=0.5):
    rng = np.random.default_rng(seed)
    J = (rng.random((n, m)) < rate).astype(float)
    return ObservationSet(Y=J * rng.standard_normal((n, m)), J=J)


def kron_A(op):
    return np.kron(op.D.T, op.half_power)


def test_matvec_zero():
    op = build_operator(random_laplacian(4, 0), 5, cfg())
    np.testing.assert_array_equal(smooth_matvec(op, np.zeros((4, 5))), 0)


@pytest.mark.parametrize("theta", [0.0, 1.0, 1.8, 2.0])
def test_matvec_matches_dense_kronecker(theta):
    op = build_operator(random_laplacian(4, 1), 5, cfg(theta=theta))
    X = np.random.default_rng(2).standard_normal((4, 5))
    A = kron_A(op)
    expected = unvec(A.T @ A @ vec(X), X.shape)
    np.testing.assert_allclose(smooth_matvec(op, X), expected, atol=1e-10)


def test_matvec_identity_collapse():
    L = random_laplacian(6, 3, kind="combinatorial")
    op = build_operator(L, 4, cfg(theta=0.0, eps=0.0, r=1.0))
    X = np.random.default_rng(4).standard_normal((6, 4))
    np.testing.assert_allclose(smooth_matvec(op, X), L @ X, atol=1e-12)


def test_matvec_shape_mismatch():
    op = build_operator(random_laplacian(4, 0), 5, cfg())
    with pytest.raises(ValueError):
        smooth_matvec(op, np.zeros((5, 4)))


@given(st.integers(0, 10_000), st.floats(0.5, 2.5))
def test_three_forms_of_smoothness(seed, theta):
    op = build_operator(random_laplacian(5, seed), 4, cfg(theta=theta))
    X = np.random.default_rng(seed).standard_normal((5, 4))
    trace_form = np.trace(op.D.T @ X.T @ op.full_power @ X @ op.D)
    frob_form = np.linalg.norm(op.half_power @ X @ op.D) ** 2
    kron_form = np.linalg.norm(kron_A(op) @ vec(X)) ** 2
    assert frob_form == pytest.approx(trace_form, rel=1e-9)
    assert kron_form == pytest.approx(trace_form, rel=1e-9)
    assert smoothness_value(op, X) == pytest.approx(trace_form, rel=1e-9)


def test_operator_needs_enough_time_steps():
    with pytest.raises(ValueError):
        build_operator(random_laplacian(4, 0), 3, cfg(theta=1.8))


# ---- X-subproblem

def test_subproblem_full_mask_no_smoothing():
    rng = np.random.default_rng(0)
    Y, T = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    obs = ObservationSet(Y=Y, J=np.ones((4, 5)))
    op = build_operator(random_laplacian(4, 0), 5, cfg())
    rho = 0.3
    X = solve_x_subproblem(obs, op, 0.0, rho, T)
    np.testing.assert_allclose(X, (Y + rho * T) / (1 + rho), atol=1e-13)


def test_subproblem_empty_mask():
    T = np.random.default_rng(1).standard_normal((4, 5))
    obs = ObservationSet(Y=np.zeros((4, 5)), J=np.zeros((4, 5)))
    op = build_operator(random_laplacian(4, 0), 5, cfg())
    np.testing.assert_allclose(solve_x_subproblem(obs, op, 0.0, 0.7, T), T, atol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_solver_paths_agree(seed):
    obs = observation(6, 5, seed)
    op = build_operator(random_laplacian(6, seed), 5, cfg(gamma=0.5, tau=2))
    T = np.random.default_rng(seed).standard_normal((6, 5))
    sols = {}
    for method in ("direct", "dense", "cg"):
        opts = SolverOptions(linear_solver=method, cg_tol=1e-13)
        sols[method] = solve_x_subproblem(obs, op, 0.5, 0.2, T, opts, gamma=0.5)
    ref = sols["dense"]
    for method in ("direct", "cg"):
        assert np.linalg.norm(sols[method] - ref) <= 1e-8 * np.linalg.norm(ref)


def test_dense_matrix_is_kronecker_system():
    obs = observation(5, 6, 3)
    op = build_operator(random_laplacian(5, 3), 6, cfg(gamma=1.0, tau=2))
    sys_ = XSystem(obs.J, op, 0.3, 0.1, gamma=1.0, method="dense")
    A = kron_A(op)
    S = np.diag(vec(obs.J)) + 0.3 * A.T @ A + 1.0 * np.kron(op.Lt, np.eye(5)) + 0.1 * np.eye(30)
    np.testing.assert_allclose(sys_.dense_matrix(), S, atol=1e-12)
    V = np.random.default_rng(0).standard_normal((5, 6))
    np.testing.assert_allclose(vec(sys_.matvec(V)), S @ vec(V), atol=1e-12)


def test_auto_and_aliases():
    op = build_operator(random_laplacian(5, 0), 6, cfg())
    J = np.ones((5, 6))
    assert XSystem(J, op, 1.0, 0.1, method="auto").method == "direct"
    assert XSystem(J, op, 1.0, 0.1, method="direct_cholesky").method == "direct"
    assert XSystem(J, op, 1.0, 0.1, method="kronecker_cg").method == "cg"
    with pytest.raises(ValueError):
        XSystem(J, op, 1.0, 0.1, method="lu")


def test_singular_system_rejected():
    op = build_operator(random_laplacian(4, 0), 5, cfg(theta=0.0, eps=0.0, r=1.0))
    J = np.zeros((4, 5))
    for method in ("direct", "dense"):
        with pytest.raises(ValueError, match="singular"):
            XSystem(J, op, 0.0, 0.0, method=method)


def test_cg_reports_residual_on_failure():
    obs = observation(6, 5, 0)
    op = build_operator(random_laplacian(6, 0), 5, cfg())
    sys_ = XSystem(obs.J, op, 10.0, 1e-3, method="cg", cg_tol=1e-14, cg_max_iters=2)
    with pytest.raises(ConvergenceError) as info:
        sys_.solve(np.random.default_rng(0).standard_normal((6, 5)))
    assert info.value.residual > 1e-14 and info.value.iterations == 2


def test_cg_plain_spd():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((8, 8))
    A = B @ B.T + 8 * np.eye(8)
    b = rng.standard_normal(8)
    x, its = conjugate_gradient(lambda v: A @ v, b, tol=1e-12, max_iters=100)
    np.testing.assert_allclose(A @ x, b, atol=1e-9)
    assert 0 < its <= 8 + 2
    assert conjugate_gradient(lambda v: A @ v, np.zeros(8))[1] == 0
