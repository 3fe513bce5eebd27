import numpy as np
import pytest

from oracles import central_difference, cvx_theta_block, near_stationary_pair, random_spd, random_sym
from pgl_lab.graph_domain import ContractError, PglConfig, commutator_residual
from pgl_lab.projections import project_S_dykstra
from pgl_lab.theta_update import (
    ThetaAdmmState,
    grad_f,
    is_positive_definite,
    lipschitz_L2,
    logdet_prox_eigs,
    q_step,
    restore_feasibility,
    run_theta_inner,
    theta_step,
    y_step,
)


def _penalty(T, S, Q, Y, beta):
    C = S @ T - T @ S - Q + Y / beta
    return 0.5 * np.sum(C * C)


def test_grad_f_matches_finite_differences(rng):
    for _ in range(20):
        T, S, Q, Y = (random_sym(5, rng) for _ in range(4))
        beta = rng.uniform(0.5, 3)
        fd = central_difference(lambda X: _penalty(X, S, Q, Y, beta), T)
        g = grad_f(T, S, Q, Y, beta)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


def test_grad_f_zero_for_commuting_pair(rng):
    S = random_sym(4, rng)
    zero = np.zeros((4, 4))
    np.testing.assert_allclose(grad_f(S @ S + 2 * np.eye(4), S, zero, zero, 1.0), 0, atol=1e-10)


def test_lipschitz_L2():
    assert lipschitz_L2(np.eye(3), 1.0) == pytest.approx(4.0)
    assert lipschitz_L2(np.eye(3), 0.5) == pytest.approx(2.0)


def test_logdet_prox_examples():
    # L = 1, lam = 0 -> x = 1; L = 4, lam = 0 -> x = 0.5
    np.testing.assert_allclose(logdet_prox_eigs(np.array([0.0]), 1.0), [1.0])
    np.testing.assert_allclose(logdet_prox_eigs(np.array([0.0]), 4.0), [0.5])
    lam = np.array([-1e8, -3.0, 0.5, 1e8])
    x = logdet_prox_eigs(lam, 2.0)
    assert np.all(x > 0)
    np.testing.assert_allclose(x - 1.0 / (2.0 * x), lam, rtol=1e-12)


def _stationarity(T_new, st, S, sigma_hat):
    G = st.beta * grad_f(st.Theta, S, st.Q, st.Y, st.beta) + sigma_hat
    return np.linalg.norm(-np.linalg.inv(T_new) + G + st.L2 * (T_new - st.Theta))


def test_theta_step_first_order_condition(rng):
    for _ in range(20):
        n = 5
        S = project_S_dykstra(np.abs(random_sym(n, rng))).X
        C = random_spd(n, rng)
        st = ThetaAdmmState.start(random_spd(n, rng), rng.uniform(0.5, 2))
        # multipliers live where commutators of symmetric matrices do
        A, B = rng.standard_normal((2, n, n))
        st.Q, st.Y = 0.1 * (A - A.T), 0.1 * (B - B.T)
        st.L2 = lipschitz_L2(S, st.beta)
        T_new = theta_step(st, S, C)
        assert np.min(np.linalg.eigvalsh(T_new)) > 0
        assert _stationarity(T_new, st, S, C) <= 1e-6


def test_theta_step_zero_graph_gives_inverse_covariance(rng):
    n = 4
    C = random_spd(n, rng)
    st = ThetaAdmmState.start(np.eye(n), 1.0)
    # with S = 0 the penalty vanishes; a tiny step size keeps the prox near
    # the previous iterate, a huge L2 pins it; iterate to the fixed point
    st.L2 = 1.0
    for _ in range(500):
        st.Theta = theta_step(st, np.zeros((n, n)), C)
    np.testing.assert_allclose(st.Theta, np.linalg.inv(C), rtol=1e-6)


def test_q_y_steps():
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    T = np.diag([1.0, 3.0])
    zero = np.zeros((2, 2))
    C = S @ T - T @ S
    np.testing.assert_allclose(q_step(S, T, zero, 1.0, 100.0), C)
    np.testing.assert_allclose(y_step(zero, S, T, C, 2.0), 0)


def test_is_positive_definite():
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.diag([1.0, 0.0]))
    assert not is_positive_definite(-np.eye(2))


def test_run_theta_inner_rejects_indefinite_covariance(rng):
    S = project_S_dykstra(np.zeros((3, 3))).X
    with pytest.raises(ContractError):
        run_theta_inner(S, np.diag([1.0, 1.0, -1.0]), ThetaAdmmState.start(np.eye(3), 1.0), PglConfig(delta=1.0))


def test_run_theta_inner_matches_conic_solver(rng):
    n = 4
    for _ in range(3):
        S, T0 = near_stationary_pair(n, rng)
        C = np.linalg.inv(T0)
        delta = 0.5 * commutator_residual(T0, S)
        _, f_ref = cvx_theta_block(S, C, delta)
        cfg = PglConfig(delta=delta, inner_tol=1e-10)
        st = run_theta_inner(S, C, ThetaAdmmState.start(np.linalg.inv(C), 1.0), cfg, iters=20000)
        T = restore_feasibility(st.Theta, S, delta)
        f = -np.linalg.slogdet(T)[1] + np.sum(C * T)
        assert abs(f - f_ref) <= 1e-3 * abs(f_ref)
        assert commutator_residual(T, S) <= delta * (1 + 1e-9)


def test_restore_feasibility(rng):
    n = 5
    S = project_S_dykstra(np.abs(random_sym(n, rng))).X
    T = random_spd(n, rng)
    delta = 0.05
    out = restore_feasibility(T, S, delta)
    assert commutator_residual(out, S) <= delta
    assert is_positive_definite(out)
    # already feasible input is returned unchanged
    np.testing.assert_array_equal(restore_feasibility(out, S, 10.0), out)
