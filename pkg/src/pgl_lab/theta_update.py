"""ADMM for the precision block, with the closed-form log-det proximal step."""

from dataclasses import dataclass, field, replace

import numpy as np

from .graph_domain import ContractError, PglConfig, spectral_norm
from .projections import project_frobenius_ball
from .s_update import NumericalDivergence, _check_finite, adapt_beta


@dataclass
class ThetaAdmmState:
    Theta: np.ndarray
    Q: np.ndarray
    Y: np.ndarray
    beta: float
    L2: float = 0.0
    n_adapt: int = 0
    iterations: int = 0
    primal_res: list = field(default_factory=list)
    dual_res: list = field(default_factory=list)

    @classmethod
    def start(cls, Theta, beta):
        n = Theta.shape[0]
        return cls(np.array(Theta, dtype=np.float64), np.zeros((n, n)), np.zeros((n, n)), float(beta))


def grad_f(T, S, Q, Y, beta):
    """Gradient of ``0.5 * ||S T - T S - Q + Y / beta||_F^2`` with respect to T."""
    if beta <= 0:
        raise ContractError("beta must be positive")
    T, S, Q, Y = (np.asarray(x, dtype=np.float64) for x in (T, S, Q, Y))
    if not T.shape == S.shape == Q.shape == Y.shape:
        raise ContractError("dimension mismatch")
    SS = S @ S
    return SS @ T + T @ SS - 2.0 * S @ T @ S + Q @ S - S @ Q + (S @ Y - Y @ S) / beta


def lipschitz_L2(S, beta):
    if beta < 0:
        raise ContractError("beta must be nonnegative")
    return beta * 4.0 * spectral_norm(S) ** 2


def logdet_prox_eigs(lam, L):
    """Positive root of ``x - 1/(L x) = lam``, computed without cancellation."""
    c = 4.0 / L
    root = np.sqrt(lam * lam + c)
    return np.where(lam >= 0, 0.5 * (lam + root), 0.5 * c / (root - lam))


def theta_step(state, S, sigma_hat):
    """Closed-form minimizer of the majorized log-det subproblem.

    Shifts the current precision by the linearized penalty and data terms,
    then maps each eigenvalue ``lam`` of the result to the positive root of
    ``x - 1/(L2 x) = lam``. The output is symmetric positive definite.
    """
    if state.L2 <= 0:
        raise ContractError("L2 must be positive")
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    G = state.beta * grad_f(state.Theta, S, state.Q, state.Y, state.beta) + sigma_hat
    M = state.Theta - G / state.L2
    M = 0.5 * (M + M.T)
    try:
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalDivergence(f"eigendecomposition failed in theta_step: {exc}") from exc
    return (U * logdet_prox_eigs(lam, state.L2)) @ U.T


def q_step(S, T, Y, beta, delta):
    return project_frobenius_ball(S @ T - T @ S + Y / beta, delta)


def y_step(Y, S, T, Q, beta):
    return Y + beta * (S @ T - T @ S - Q)


def is_positive_definite(M, rel=1e-10):
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(w[0] > rel * max(w[-1], 0.0) and w[0] > 0)


def run_theta_inner(S, sigma_hat, init, cfg: PglConfig, iters=None, tol=None):
    """Run the precision-block ADMM; the default tolerance is the S-block one
    loosened by ``cfg.theta_tol_factor``."""
    if cfg.delta is None:
        raise ContractError("run_theta_inner needs a resolved delta")
    S = np.asarray(S, dtype=np.float64)
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    if not is_positive_definite(sigma_hat):
        raise ContractError("sample covariance must be positive definite")
    n = S.shape[0]
    iters = cfg.inner_iters if iters is None else iters
    tol = (cfg.inner_tol * cfg.theta_tol_factor if tol is None else tol) * n
    delta = cfg.delta
    st = replace(init, primal_res=list(init.primal_res), dual_res=list(init.dual_res))
    norm_S2 = spectral_norm(S) ** 2

    def l2_of(beta):
        return max(beta * 4.0 * norm_S2, cfg.l2_floor)

    st.L2 = l2_of(st.beta)
    for _ in range(iters):
        st.Theta = theta_step(st, S, sigma_hat)
        _check_finite("theta_step", st.Theta)
        Q_old = st.Q
        st.Q = q_step(S, st.Theta, st.Y, st.beta, delta)
        st.Y = y_step(st.Y, S, st.Theta, st.Q, st.beta)
        _check_finite("y_step", st.Y)
        st.iterations += 1

        r = S @ st.Theta - st.Theta @ S - st.Q
        dQ = st.Q - Q_old
        s = st.beta * (S @ dQ - dQ @ S)
        nr, ns = float(np.linalg.norm(r)), float(np.linalg.norm(s))
        st.primal_res.append(nr)
        st.dual_res.append(ns)
        if nr < tol and ns < tol:
            break
        if cfg.adapt_beta and st.n_adapt < cfg.beta_freeze_after:
            new_beta = adapt_beta(st.beta, r, s, cfg.mu, cfg.tau_inc, cfg.tau_dec)
            if new_beta != st.beta:
                st.beta = new_beta
                st.n_adapt += 1
                st.L2 = l2_of(st.beta)
    return st


def restore_feasibility(Theta, S, delta, cluster_tol=1e-9):
    """Pull ``Theta`` toward the commutant of ``S`` until the budget holds.

    The commutant projection (pinching in the eigenbasis of ``S``) preserves
    positive definiteness, and the commutator is affine along the segment, so
    the returned matrix is the point of that segment closest to ``Theta``
    with ``||Theta S - S Theta||_F <= delta``.
    """
    Theta = np.asarray(Theta, dtype=np.float64)
    C = Theta @ S - S @ Theta
    if np.linalg.norm(C) <= delta:
        return Theta
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    scale = max(1.0, float(np.max(np.abs(w))))
    B = V.T @ Theta @ V
    groups = np.concatenate([[0], np.cumsum(np.diff(w) > cluster_tol * scale)])
    B = np.where(groups[:, None] == groups[None, :], B, 0.0)
    Tc = V @ B @ V.T
    Tc = 0.5 * (Tc + Tc.T)
    Cc = Tc @ S - S @ Tc
    D = C - Cc
    # largest t in [0, 1] with ||Cc + t D|| <= delta
    a, b, c = np.sum(D * D), 2.0 * np.sum(Cc * D), np.sum(Cc * Cc) - delta**2
    if c >= 0 or a == 0:
        t = 0.0
    else:
        t = min(1.0, (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a))
    t *= 1.0 - 1e-12
    return Tc + t * (Theta - Tc)
