"""Alternating PGL solver plus the GSR, graphical-lasso and correlation baselines."""

import logging
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .graph_domain import ContractError, PglConfig, SampleCovariance, commutator_residual
from .projections import project_S_dykstra
from .s_update import NumericalDivergence, SAdmmState, run_s_inner
from .theta_update import ThetaAdmmState, is_positive_definite, restore_feasibility, run_theta_inner

log = logging.getLogger(__name__)


@dataclass
class SolveResult:
    S_hat: np.ndarray
    Theta_hat: np.ndarray
    objective_trace: list
    commutator_trace: list
    beta_traces: dict
    status: str
    wall_clock: float
    delta: float
    inner_iterations: dict = field(default_factory=dict)


@dataclass
class GsrResult:
    S: np.ndarray
    status: str
    residual: float
    bound: float
    iterations: int


def _unpack_cov(sigma_hat, n_samples=None):
    if isinstance(sigma_hat, SampleCovariance):
        return np.array(sigma_hat.values), (n_samples or sigma_hat.sample_count)
    S = np.asarray(sigma_hat, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError("covariance must be square")
    return S.copy(), n_samples


def objective(T, S, sigma_hat, rho, eta):
    """``-log det T + tr(sigma_hat T) + rho ||S||_1 + eta/2 ||S||_F^2``."""
    T = np.asarray(T, dtype=np.float64)
    sign, logdet = np.linalg.slogdet(T)
    if sign <= 0 or not np.isfinite(logdet):
        raise ContractError("objective needs a positive definite precision")
    S = np.asarray(S, dtype=np.float64)
    sig = np.asarray(sigma_hat, dtype=np.float64)
    return float(-logdet + np.sum(sig * T) + rho * np.abs(S).sum() + 0.5 * eta * np.sum(S * S))


def regularize_covariance(sigma_hat, eps_rel=1e-3):
    """Return a positive definite covariance, adding a spectral floor if needed."""
    S = 0.5 * (sigma_hat + sigma_hat.T)
    if is_positive_definite(S):
        return S
    n = S.shape[0]
    eps = eps_rel * max(np.trace(S), 1e-12) / n
    warnings.warn(f"sample covariance is not positive definite; adding {eps:.3g} * I", stacklevel=3)
    return S + eps * np.eye(n)


def noise_level(M, n_samples):
    """Frobenius size of the sampling error of a Wishart-type estimate ``M``."""
    return float(np.sqrt((np.trace(M) ** 2 + np.sum(M * M)) / n_samples))


def default_delta(sigma_hat, n_samples, delta0=1.0):
    """Commutator budget ``delta0 * sqrt((tr T)^2 + ||T||_F^2) / sqrt(R)``, ``T = inv(sigma_hat)``.

    For a unit-scale precision this is ``delta0 * N / sqrt(R)``; the trace
    form keeps the budget invariant to rescaling the data.
    """
    return delta0 * noise_level(np.linalg.inv(sigma_hat), n_samples)


def gsr_solve(sigma_hat, epsilon, cfg: PglConfig = PglConfig(), iters=None):
    """Sparsest feasible S that nearly commutes with the sample covariance.

    Solves ``min ||S||_1`` over the feasible GSO set subject to
    ``||sigma_hat S - S sigma_hat||_F^2 <= epsilon`` with the S-block ADMM.
    """
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    C, _ = _unpack_cov(sigma_hat)
    n = C.shape[0]
    bound = float(np.sqrt(epsilon))
    sub = replace(cfg, delta=bound)
    S0 = project_S_dykstra(np.zeros((n, n)), cfg.dykstra_max_iters, cfg.dykstra_tol).X
    st = run_s_inner(C, SAdmmState.start(S0, cfg.beta0), sub, iters=iters or cfg.gsr_iters)
    res = commutator_residual(C, st.S)
    status = "converged" if res <= bound * (1 + 1e-3) else "nonConverged"
    return GsrResult(st.S, status, res, bound, st.iterations)


def default_gsr_epsilon(sigma_hat, n_samples, c=1.0):
    """Squared commutator tolerance ``c * ((tr C)^2 + ||C||_F^2) / R``."""
    return float(c * noise_level(sigma_hat, n_samples) ** 2)


def _soft(X, t):
    return np.sign(X) * np.maximum(np.abs(X) - t, 0.0)


def glasso_kkt_residual(Theta, sigma_hat, rho):
    """Max violation of the graphical-lasso optimality conditions."""
    G = np.linalg.inv(Theta) - sigma_hat
    n = G.shape[0]
    off = ~np.eye(n, dtype=bool)
    nz = off & (Theta != 0)
    z = off & (Theta == 0)
    parts = [np.abs(np.diag(G))]
    if nz.any():
        parts.append(np.abs(G[nz] - rho * np.sign(Theta[nz])))
    if z.any():
        parts.append(np.maximum(np.abs(G[z]) - rho, 0.0))
    return float(max(p.max() for p in parts))


def graphical_lasso(sigma_hat, rho, cfg: PglConfig = PglConfig(), max_iter=20000, tol=1e-5):
    """l1-penalised Gaussian maximum likelihood (off-diagonal penalty) by ADMM.

    The log-det block uses the same eigenvalue map as the PGL precision step;
    the l1 block is entrywise soft-thresholding. Stops once the KKT residual
    of the sparse iterate is at most ``tol``.
    """
    C, _ = _unpack_cov(sigma_hat)
    C = 0.5 * (C + C.T)
    n = C.shape[0]
    if rho < 0:
        raise ContractError("rho must be nonnegative")
    if rho == 0:
        return np.linalg.inv(regularize_covariance(C, cfg.cov_reg))
    off = ~np.eye(n, dtype=bool)
    lam = np.where(off, rho, 0.0)
    Z = np.diag(1.0 / np.maximum(np.diag(C), 1e-12))
    U = np.zeros((n, n))
    pen = 1.0
    best, best_kkt = Z, np.inf
    for it in range(max_iter):
        w, V = np.linalg.eigh(pen * (Z - U) - C)
        X = (V * ((w + np.sqrt(w * w + 4 * pen)) / (2 * pen))) @ V.T
        Z_old = Z
        Z = _soft(X + U, lam / pen)
        U = U + X - Z
        if not np.all(np.isfinite(Z)):
            raise NumericalDivergence("graphical lasso diverged")
        if it % 10 == 9:
            if is_positive_definite(Z):
                kkt = glasso_kkt_residual(Z, C, rho)
                if kkt < best_kkt:
                    best, best_kkt = Z, kkt
                if kkt <= tol:
                    return Z
            r = np.linalg.norm(X - Z)
            s = pen * np.linalg.norm(Z - Z_old)
            if r > 10 * s:
                pen *= 2
                U /= 2
            elif s > 10 * r:
                pen /= 2
                U *= 2
    log.warning("graphical lasso stopped at KKT residual %.3g", best_kkt)
    return best


def glasso_penalty(sigma_hat, factor):
    """Absolute penalty ``factor * median |off-diagonal of sigma_hat|``."""
    C = np.asarray(sigma_hat, dtype=np.float64)
    off = C[~np.eye(C.shape[0], dtype=bool)]
    scale = float(np.median(np.abs(off))) if off.size else 0.0
    return factor * max(scale, 1e-12 * float(np.abs(np.diag(C)).max(initial=1.0)))


def glasso_graph(Theta):
    """Map a precision estimate to a graph: absolute off-diagonal entries."""
    A = np.abs(np.asarray(Theta, dtype=np.float64))
    np.fill_diagonal(A, 0.0)
    return A


def correlation_network(X, threshold):
    """Thresholded absolute Pearson correlation graph of the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ContractError("need an n x R signal matrix with R >= 2")
    Xc = X - X.mean(axis=1, keepdims=True)
    sd = np.sqrt(np.sum(Xc * Xc, axis=1))
    dead = sd == 0
    if dead.any():
        warnings.warn(f"{int(dead.sum())} constant node signal(s) left isolated", stacklevel=2)
    sd = np.where(dead, 1.0, sd)
    Cr = np.abs((Xc / sd[:, None]) @ (Xc / sd[:, None]).T)
    Cr[dead, :] = 0.0
    Cr[:, dead] = 0.0
    np.fill_diagonal(Cr, 0.0)
    Cr[Cr < threshold] = 0.0
    return 0.5 * (Cr + Cr.T)


def resolve_config(sigma_hat, n_samples, cfg: PglConfig):
    """Materialise data-dependent defaults (``eta``, ``delta``) into the config."""
    upd = {}
    if cfg.eta is None:
        upd["eta"] = cfg.eta_value
    if cfg.delta is None:
        if n_samples is None:
            raise ContractError("delta default needs the sample count")
        upd["delta"] = default_delta(sigma_hat, n_samples, cfg.delta0)
    return replace(cfg, **upd)


def pgl_solve(sigma_hat, cfg: PglConfig = PglConfig(), n_samples=None, callback=None):
    """Jointly estimate a sparse GSO and a precision matrix.

    Parameters
    ----------
    sigma_hat : SampleCovariance or ndarray
        Sample covariance. With a bare array pass ``n_samples`` unless both
        ``cfg.delta`` and the GSR tolerance can be resolved without it.
    cfg : PglConfig

    Returns
    -------
    SolveResult
        ``objective_trace[k]`` and ``commutator_trace[k]`` are evaluated after
        outer iteration ``k``; index 0 holds the initial point.

    Notes
    -----
    With ``cfg.early_stop`` the loop ends at the first iteration ``k >= 1``
    whose objective improvement falls below the absolute ``cfg.obj_tol``. If
    that iteration actually increased the objective by more than ``obj_tol``
    it is discarded, so ``objective_trace[1:]`` is non-increasing up to
    ``obj_tol``.
    """
    t0 = time.perf_counter()
    C, R = _unpack_cov(sigma_hat, n_samples)
    C = regularize_covariance(C, cfg.cov_reg)
    cfg = resolve_config(C, R, cfg)
    rho, eta, delta = cfg.rho, cfg.eta_value, cfg.delta

    if cfg.init == "glasso":
        Theta = graphical_lasso(C, glasso_penalty(C, cfg.glasso_rho), cfg)
        G = glasso_graph(Theta)
        S = project_S_dykstra(G / max(G.max(), 1e-12), cfg.dykstra_max_iters, cfg.dykstra_tol).X
    else:
        Theta = np.linalg.inv(C)
        Theta = 0.5 * (Theta + Theta.T)
        if R is None:
            raise ContractError("GSR initialisation needs the sample count")
        S = gsr_solve(C, default_gsr_epsilon(C, R, cfg.gsr_eps_c), cfg).S

    s_st = SAdmmState.start(S, cfg.beta0)
    t_st = ThetaAdmmState.start(Theta, cfg.beta0)
    obj = [objective(Theta, S, C, rho, eta)]
    comm = [commutator_residual(Theta, S)]
    betas = {"s": [], "theta": []}
    iters = {"s": [], "theta": []}
    status = "maxIters"
    for k in range(cfg.outer_iters):
        prev = (S, Theta)
        s_st = run_s_inner(Theta, s_st, cfg)
        S = s_st.S
        t_st.Theta = Theta
        t_st = run_theta_inner(S, C, t_st, cfg)
        Theta = restore_feasibility(t_st.Theta, S, delta)
        t_st.Theta = Theta
        obj.append(objective(Theta, S, C, rho, eta))
        comm.append(commutator_residual(Theta, S))
        if callback is not None:
            callback(k, Theta, S)
        betas["s"].append(s_st.beta)
        betas["theta"].append(t_st.beta)
        iters["s"].append(s_st.iterations)
        iters["theta"].append(t_st.iterations)
        # The initial point is generally infeasible, so descent is only
        # tracked from the first feasible iterate on. An ascent beyond the
        # tolerance is rejected and the previous iterate returned.
        if cfg.early_stop and k >= 1 and obj[-2] - obj[-1] < cfg.obj_tol:
            if obj[-1] > obj[-2] + cfg.obj_tol:
                S, Theta = prev
                for trace in (obj, comm, betas["s"], betas["theta"], iters["s"], iters["theta"]):
                    trace.pop()
            status = "converged"
            break
    return SolveResult(
        S_hat=S,
        Theta_hat=Theta,
        objective_trace=obj,
        commutator_trace=comm,
        beta_traces=betas,
        status=status,
        wall_clock=time.perf_counter() - t0,
        delta=delta,
        inner_iterations=iters,
    )


METHODS = ("PGL", "GSR", "GL")


def learn_graph(method, sigma_hat, n_samples, cfg: PglConfig = PglConfig()):
    """Run one of the graph learners and return ``(graph, status)``.

    GL graphs are the absolute off-diagonal entries of the precision estimate.
    """
    method = method.upper()
    C, R = _unpack_cov(sigma_hat, n_samples)
    if method == "PGL":
        res = pgl_solve(C, cfg, n_samples=R)
        return res.S_hat, res.status
    if method == "GSR":
        if R is None:
            raise ContractError("GSR needs the sample count")
        C = regularize_covariance(C, cfg.cov_reg)
        res = gsr_solve(C, default_gsr_epsilon(C, R, cfg.gsr_eps_c), cfg)
        return res.S, res.status
    if method == "GL":
        Theta = graphical_lasso(C, glasso_penalty(C, cfg.glasso_rho), cfg)
        return glasso_graph(Theta), "converged"
    raise ContractError(f"unknown method {method!r}; expected one of {METHODS}")
