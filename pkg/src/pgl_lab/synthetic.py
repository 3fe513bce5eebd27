"""Random graphs, graph-stationary covariance models and Gaussian signals."""

import hashlib
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graph_domain import ContractError, SampleCovariance

log = logging.getLogger(__name__)

MAX_REDRAWS = 100


@dataclass(frozen=True)
class GraphModel:
    """``kind`` is one of ER, SW, SBM, BA; unused parameters are ignored."""

    kind: str = "ER"
    n: int = 20
    p: float = 0.1
    mean_degree: int = 4
    rewire_prob: float = 0.15
    clusters: int = 4
    p_intra: float = 0.8
    p_inter: float = 0.05
    edges_per_step: int = 2
    allow_isolated: bool = False

    def __post_init__(self):
        if self.kind not in ("ER", "SW", "SBM", "BA"):
            raise ContractError(f"unknown graph model {self.kind!r}")
        if self.n < 2:
            raise ContractError("need at least two nodes")
        for name in ("p", "rewire_prob", "p_intra", "p_inter"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1]")
        if self.kind == "SW" and not 0 < self.mean_degree < self.n:
            raise ContractError("mean degree must be in (0, n)")
        if self.kind == "BA" and not 0 < self.edges_per_step < self.n:
            raise ContractError("edges per step must be in (0, n)")
        if self.kind == "SBM" and not 0 < self.clusters <= self.n:
            raise ContractError("cluster count must be in (0, n]")


@dataclass(frozen=True)
class CovModel:
    """``kind`` is Poly, SSEM or MRF.

    ``mu``/``nu`` left as ``None`` are drawn per graph so the MRF precision is
    positive definite.
    """

    kind: str = "Poly"
    order: int = 3
    ssem_scale: float = 0.9
    mu: float | None = None
    nu: float | None = None
    coeffs: tuple | None = None
    max_cond: float = 100.0

    def __post_init__(self):
        if self.kind not in ("Poly", "SSEM", "MRF"):
            raise ContractError(f"unknown covariance model {self.kind!r}")
        if self.order < 1:
            raise ContractError("polynomial order must be >= 1")


@dataclass(frozen=True, eq=False)
class GraphDraw:
    S: np.ndarray
    components: int
    redraws: int
    labels: np.ndarray | None = None


def derive_seed(*key):
    """Stable 63-bit seed from an arbitrary tuple of printable values."""
    digest = hashlib.sha256("\x1f".join(map(str, key)).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def sbm_labels(n, k):
    return np.repeat(np.arange(k), int(np.ceil(n / k)))[:n]


def _draw(model, rng):
    n = model.n
    labels = None
    if model.kind == "ER":
        U = rng.random((n, n))
        A = np.triu(U < model.p, 1)
    elif model.kind == "SBM":
        labels = sbm_labels(n, model.clusters)
        same = labels[:, None] == labels[None, :]
        probs = np.where(same, model.p_intra, model.p_inter)
        A = np.triu(rng.random((n, n)) < probs, 1)
    elif model.kind == "SW":
        g = nx.watts_strogatz_graph(n, model.mean_degree, model.rewire_prob, seed=int(rng.integers(2**31)))
        A = np.triu(nx.to_numpy_array(g, nodelist=range(n)) > 0, 1)
    else:
        g = nx.barabasi_albert_graph(n, model.edges_per_step, seed=int(rng.integers(2**31)))
        A = np.triu(nx.to_numpy_array(g, nodelist=range(n)) > 0, 1)
    A = A.astype(np.float64)
    return A + A.T, labels


def count_components(S):
    from scipy.sparse.csgraph import connected_components

    return int(connected_components(np.asarray(S) > 0, directed=False)[0])


def gen_graph(model: GraphModel, seed):
    """Binary symmetric hollow adjacency matrix drawn from ``model``.

    Graphs with isolated nodes are redrawn (up to 100 attempts) unless
    ``model.allow_isolated`` is set; the redraw count is reported.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_REDRAWS):
        A, labels = _draw(model, rng)
        if model.allow_isolated or np.all(A.sum(axis=1) > 0):
            break
    else:
        log.warning("graph still has isolated nodes after %d draws", MAX_REDRAWS)
    return GraphDraw(A, count_components(A), attempt, labels)


def _matpoly(S, h):
    n = S.shape[0]
    H = np.zeros((n, n))
    P = np.eye(n)
    for c in h:
        H += c * P
        P = P @ S
    return H


def _check_pd(Sigma):
    w = np.linalg.eigvalsh(Sigma)
    if not (w[0] > 0 and w[0] > 1e-10 * w[-1]):
        raise ContractError(f"covariance not positive definite (min eig {w[0]:.3g})")
    return Sigma


def gen_covariance(S, model: CovModel, seed):
    """Exact covariance of a signal stationary on ``S``.

    Poly squares a random graph filter with unit-norm Gaussian taps, redrawn
    until ``cond(Sigma) < max_cond``; if no draw qualifies, the best
    conditioned one is used with a warning. SSEM rescales ``S`` to spectral radius
    ``ssem_scale`` before forming ``(I - S)^2``.
    """
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    I = np.eye(n)
    rng = np.random.default_rng(seed)
    if model.kind == "Poly":
        if model.coeffs is not None:
            H = _matpoly(S, model.coeffs)
            return _check_pd(0.5 * (H @ H + (H @ H).T))
        best, best_cond = None, np.inf
        for _ in range(MAX_REDRAWS):
            h = rng.standard_normal(model.order)
            h /= np.linalg.norm(h)
            H = _matpoly(S, h)
            w = np.abs(np.linalg.eigvalsh(0.5 * (H + H.T)))
            cond = w.max() / w.min() if w.min() > 0 else np.inf
            if cond < best_cond:
                best, best_cond = H, cond
            if cond < np.sqrt(model.max_cond):
                break
        else:
            if best is None:
                raise ContractError("could not draw a nonsingular polynomial filter")
            log.warning("no filter met max_cond after %d draws; using condition %.3g", MAX_REDRAWS, best_cond**2)
        Sigma = best @ best
        return _check_pd(0.5 * (Sigma + Sigma.T))
    lam = np.max(np.abs(np.linalg.eigvalsh(S))) if np.any(S) else 0.0
    if model.kind == "SSEM":
        # A graph already at the target radius is used as is, so that SSEM
        # coincides exactly with the Poly filter (1, -1) on such graphs.
        at_scale = abs(lam - model.ssem_scale) <= 1e-12 * model.ssem_scale
        A = S * (model.ssem_scale / lam) if lam > 0 and not at_scale else S
        H = _matpoly(A, (1.0, -1.0))
        return _check_pd(0.5 * (H @ H + (H @ H).T))
    nu = rng.uniform(0.5, 1.0) if model.nu is None else model.nu
    mu = 1.1 * nu * lam + 0.1 if model.mu is None else model.mu
    Theta = mu * I + nu * S
    _check_pd(Theta)
    Sigma = np.linalg.inv(Theta)
    return _check_pd(0.5 * (Sigma + Sigma.T))


def _noise_std(Sigma, noise_sigma):
    return noise_sigma * np.sqrt(np.trace(Sigma) / Sigma.shape[0])


def sample_signals(Sigma, R, noise_sigma=0.0, seed=None, chunk=1 << 16):
    """``n x R`` Gaussian signals with covariance ``Sigma`` plus white noise.

    ``noise_sigma`` is relative to the per-node RMS signal amplitude. Draws are
    generated in column chunks of size ``chunk``; the same ``seed`` and
    ``chunk`` give bitwise identical output.
    """
    Sigma = np.asarray(Sigma, dtype=np.float64)
    if R < 1:
        raise ContractError("R must be positive")
    n = Sigma.shape[0]
    L = np.linalg.cholesky(_check_pd(Sigma))
    sd = _noise_std(Sigma, noise_sigma)
    rng = np.random.default_rng(seed)
    X = np.empty((n, R))
    for a in range(0, R, chunk):
        b = min(R, a + chunk)
        X[:, a:b] = L @ rng.standard_normal((n, b - a))
        if sd > 0:
            X[:, a:b] += sd * rng.standard_normal((n, b - a))
    return X


def simulate_covariance(Sigma, R, noise_sigma=0.0, seed=None, chunk=1 << 16):
    """Sample covariance of :func:`sample_signals` output without keeping X."""
    Sigma = np.asarray(Sigma, dtype=np.float64)
    n = Sigma.shape[0]
    L = np.linalg.cholesky(_check_pd(Sigma))
    sd = _noise_std(Sigma, noise_sigma)
    rng = np.random.default_rng(seed)
    acc = np.zeros((n, n))
    for a in range(0, R, chunk):
        b = min(R, a + chunk)
        Xc = L @ rng.standard_normal((n, b - a))
        if sd > 0:
            Xc += sd * rng.standard_normal((n, b - a))
        acc += Xc @ Xc.T
    acc /= R
    return SampleCovariance(0.5 * (acc + acc.T), R)


def sample_covariance(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    R = X.shape[1]
    if R < 1:
        raise ContractError("need at least one sample")
    C = X @ X.T / R
    return SampleCovariance(0.5 * (C + C.T), R)
