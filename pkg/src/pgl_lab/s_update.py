"""Linearized ADMM for the graph block: sparse S subject to a commutator budget."""

from dataclasses import dataclass, field, replace

import numpy as np

from .graph_domain import ContractError, PglConfig, spectral_norm
from .projections import project_frobenius_ball, project_S_dykstra


class NumericalDivergence(FloatingPointError):
    """A non-finite value appeared in an iterate."""


def _check_finite(step, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalDivergence(f"non-finite values after {step}")


@dataclass
class SAdmmState:
    S: np.ndarray
    P: np.ndarray
    Z: np.ndarray
    beta: float
    L1: float = 0.0
    n_adapt: int = 0
    iterations: int = 0
    primal_res: list = field(default_factory=list)
    dual_res: list = field(default_factory=list)
    dykstra_failures: int = 0

    @classmethod
    def start(cls, S, beta):
        n = S.shape[0]
        return cls(np.array(S, dtype=np.float64), np.zeros((n, n)), np.zeros((n, n)), float(beta))


def grad_g(S, T, P, Z, beta):
    """Gradient of ``0.5 * ||T S - S T - P + Z / beta||_F^2`` with respect to S."""
    if beta <= 0:
        raise ContractError("beta must be positive")
    S, T, P, Z = (np.asarray(x, dtype=np.float64) for x in (S, T, P, Z))
    if not S.shape == T.shape == P.shape == Z.shape:
        raise ContractError("dimension mismatch")
    TT = T @ T
    return TT @ S + S @ TT - 2.0 * T @ S @ T + P @ T - T @ P + (T @ Z - Z @ T) / beta


def lipschitz_L1(T, beta, eta):
    if beta < 0 or eta < 0:
        raise ContractError("beta and eta must be nonnegative")
    return beta * 4.0 * spectral_norm(T) ** 2 + eta


def _smooth_part(S, T, P, Z, beta, eta):
    C = T @ S - S @ T - P + Z / beta
    return 0.5 * beta * np.sum(C * C) + 0.5 * eta * np.sum(S * S)


def surrogate(S_new, S_old, T, P, Z, beta, rho, eta, L1):
    """Linearized objective of one S step, relative to the current point."""
    G = rho * np.ones_like(S_old) + eta * S_old + beta * grad_g(S_old, T, P, Z, beta)
    D = S_new - S_old
    return float(np.sum(G * D) + 0.5 * L1 * np.sum(D * D))


def s_step(state, T, rho, eta, max_iters=1000, tol=1e-9):
    """One majorized step on S, followed by projection onto the feasible set.

    The l1 term enters through its gradient on the nonnegative orthant, i.e. a
    constant ``rho`` on every entry.

    Returns
    -------
    S_new : ndarray
    converged : bool
        Whether the inner Dykstra projection met ``tol``.
    """
    if state.L1 <= 0:
        raise ContractError("L1 must be positive")
    S = state.S
    G = rho + eta * S + state.beta * grad_g(S, T, state.P, state.Z, state.beta)
    res = project_S_dykstra(S - G / state.L1, max_iters, tol)
    return res.X, res.converged


def _s_step_backtracking(state, T, rho, eta, cfg, L_cap):
    S = state.S
    h0 = _smooth_part(S, T, state.P, state.Z, state.beta, eta)
    grad = eta * S + state.beta * grad_g(S, T, state.P, state.Z, state.beta)
    L = max(state.L1 * cfg.backtrack_factor, 1e-12)
    for _ in range(cfg.backtrack_max):
        if L >= L_cap:
            break
        res = project_S_dykstra(S - (rho + grad) / L, cfg.dykstra_max_iters, cfg.dykstra_tol)
        D = res.X - S
        h1 = _smooth_part(res.X, T, state.P, state.Z, state.beta, eta)
        if h1 <= h0 + np.sum(grad * D) + 0.5 * L * np.sum(D * D) + 1e-12 * max(1.0, abs(h0)):
            return res.X, res.converged, L
        L /= cfg.backtrack_factor
    L = L_cap
    res = project_S_dykstra(S - (rho + grad) / L, cfg.dykstra_max_iters, cfg.dykstra_tol)
    return res.X, res.converged, L


def p_step(T, S, Z, beta, delta):
    return project_frobenius_ball(T @ S - S @ T + Z / beta, delta)


def z_step(Z, T, S, P, beta):
    return Z + beta * (T @ S - S @ T - P)


def adapt_beta(beta, r, s, mu, tau_inc, tau_dec):
    """Residual-balancing penalty update; ties leave ``beta`` unchanged."""
    if min(mu, tau_inc, tau_dec) <= 1:
        raise ContractError("mu, tau_inc and tau_dec must exceed 1")
    nr = np.linalg.norm(r)
    ns = np.linalg.norm(s)
    if nr > mu * ns:
        return beta * tau_inc
    if ns > mu * nr:
        return beta / tau_dec
    return beta


def run_s_inner(T, init, cfg: PglConfig, iters=None, tol=None):
    """Run the S-block ADMM for ``cfg.inner_iters`` iterations (or ``iters``).

    ``cfg.delta`` must already be resolved. Exits early once both residual
    norms fall below ``tol * n`` (default ``cfg.inner_tol``).
    """
    if cfg.delta is None:
        raise ContractError("run_s_inner needs a resolved delta")
    T = np.asarray(T, dtype=np.float64)
    n = T.shape[0]
    iters = cfg.inner_iters if iters is None else iters
    tol = (cfg.inner_tol if tol is None else tol) * n
    rho, eta, delta = cfg.rho, cfg.eta_value, cfg.delta
    st = replace(init, primal_res=list(init.primal_res), dual_res=list(init.dual_res))
    norm_T2 = spectral_norm(T) ** 2

    def l1_cap(beta):
        return beta * 4.0 * norm_T2 + eta

    if st.L1 <= 0 or cfg.lipschitz_mode == "analytic":
        st.L1 = l1_cap(st.beta)

    for _ in range(iters):
        if cfg.lipschitz_mode == "backtracking":
            S_new, ok, st.L1 = _s_step_backtracking(st, T, rho, eta, cfg, l1_cap(st.beta))
        else:
            S_new, ok = s_step(st, T, rho, eta, cfg.dykstra_max_iters, cfg.dykstra_tol)
        _check_finite("s_step", S_new)
        st.dykstra_failures += not ok
        st.S = S_new
        P_old = st.P
        st.P = p_step(T, st.S, st.Z, st.beta, delta)
        _check_finite("p_step", st.P)
        st.Z = z_step(st.Z, T, st.S, st.P, st.beta)
        _check_finite("z_step", st.Z)
        st.iterations += 1

        r = T @ st.S - st.S @ T - st.P
        dP = st.P - P_old
        s = st.beta * (T @ dP - dP @ T)
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
                if cfg.lipschitz_mode == "analytic":
                    st.L1 = l1_cap(st.beta)
    return st
