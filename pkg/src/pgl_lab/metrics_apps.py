"""Recovery metrics and downstream uses of learned graphs."""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .graph_domain import EIG_TOL, ContractError, PglConfig, _square
from .solver import METHODS, learn_graph

log = logging.getLogger(__name__)

EDGE_THRESHOLD = 0.1


def nme(S_star, S_hat):
    """Normalized mean error ``||S* - S_hat||_F^2 / ||S*||_F^2``."""
    A = _square(S_star)
    B = np.asarray(S_hat, dtype=np.float64)
    if A.shape != B.shape:
        raise ContractError(f"shape mismatch {A.shape} vs {B.shape}")
    ref = float(np.sum(A * A))
    if ref == 0:
        raise ContractError("nme is undefined for an all-zero ground truth")
    return float(np.sum((A - B) ** 2) / ref)


def normalize_estimate(S_hat, convention: Literal["none", "maxEntry", "bestScale"] = "none", S_star=None):
    """Rescale an estimate so methods with different scales compare fairly.

    Parameters
    ----------
    S_hat : array_like
        The estimate.
    convention : {"none", "maxEntry", "bestScale"}
        ``maxEntry`` divides by the largest absolute entry. ``bestScale``
        applies the least-squares factor ``<S*, S_hat> / ||S_hat||_F^2`` and
        therefore needs ``S_star``.
    """
    B = np.asarray(S_hat, dtype=np.float64)
    if not np.all(np.isfinite(B)):
        raise ContractError("estimate has non-finite entries")
    if convention == "none":
        return B.copy()
    if convention == "maxEntry":
        m = float(np.max(np.abs(B))) if B.size else 0.0
        if m == 0:
            raise ContractError("cannot maxEntry-normalize an all-zero estimate")
        return B / m
    if convention == "bestScale":
        if S_star is None:
            raise ContractError("bestScale needs the ground truth")
        A = np.asarray(S_star, dtype=np.float64)
        den = float(np.sum(B * B))
        return B * (float(np.sum(A * B)) / den) if den > 0 else B.copy()
    raise ContractError(f"unknown convention {convention!r}")


def support_scores(S_star, S_hat, threshold=EDGE_THRESHOLD):
    """F-score and accuracy of the off-diagonal edge support.

    An estimated edge is present when its magnitude exceeds ``threshold``
    times the largest absolute entry of the estimate.
    """
    A = _square(S_star)
    B = np.abs(np.asarray(S_hat, dtype=np.float64))
    off = ~np.eye(A.shape[0], dtype=bool)
    truth = (A != 0) & off
    top = B.max() if B.size else 0.0
    est = (B > threshold * top) & off if top > 0 else np.zeros_like(truth)
    tp = int(np.sum(truth & est))
    fp = int(np.sum(~truth & est & off))
    fn = int(np.sum(truth & ~est))
    denom = 2 * tp + fp + fn
    fscore = 2 * tp / denom if denom else 1.0
    accuracy = float(np.sum((truth == est) & off) / max(int(off.sum()), 1))
    return {"fscore": float(fscore), "accuracy": accuracy}


def laplacian(S):
    """Combinatorial Laplacian ``diag(S 1) - S``."""
    A = _square(S)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-8 or np.min(A, initial=0.0) < -1e-12:
        raise ContractError("Laplacian needs a symmetric nonnegative matrix")
    A = 0.5 * (A + A.T)
    return np.diag(A.sum(axis=1)) - A


def algebraic_connectivity(S, tol=EIG_TOL):
    """Second-smallest Laplacian eigenvalue; 0 for disconnected graphs."""
    w = np.linalg.eigvalsh(laplacian(S))
    if w.size < 2:
        return 0.0
    lam2 = float(w[1])
    scale = max(1.0, float(np.abs(w).max()))
    return 0.0 if lam2 <= tol * scale else lam2


def spectral_clustering(S, k, seed=0, n_init=20, max_iter=300):
    """Group the nodes of ``S`` into ``k`` communities.

    Rows of the ``k`` Laplacian eigenvectors of smallest eigenvalue are
    clustered with seeded k-means.
    """
    L = laplacian(S)
    n = L.shape[0]
    if k < 2 or k > n:
        raise ContractError(f"need 2 <= k <= n, got k={k}, n={n}")
    _, V = np.linalg.eigh(L)
    emb = V[:, :k]
    km = KMeans(n_clusters=k, n_init=n_init, max_iter=max_iter, random_state=seed)
    with warnings.catch_warnings():
        # degenerate spectra (e.g. complete graphs) give duplicate points
        warnings.simplefilter("ignore")
        return km.fit_predict(emb)


def clustering_error(labels, truth):
    """Fraction of misassigned nodes under the best matching of label names."""
    a = np.asarray(labels)
    b = np.asarray(truth)
    if a.shape != b.shape:
        raise ContractError("label vectors differ in length")
    if a.size == 0:
        return 0.0
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    M = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(M, (ia, ib), 1)
    r, c = linear_sum_assignment(-M)
    return float(1.0 - M[r, c].sum() / a.size)


@dataclass(frozen=True)
class RollingWindowPlan:
    window_length: int = 30
    stride: int = 1
    method: str = "PGL"
    config: PglConfig = field(default_factory=PglConfig)

    def __post_init__(self):
        if self.window_length < 2:
            raise ContractError("window_length must be at least 2")
        if self.stride < 1:
            raise ContractError("stride must be at least 1")
        if self.method.upper() not in METHODS:
            raise ContractError(f"unknown method {self.method!r}")

    def count(self, D):
        if D < self.window_length:
            raise ContractError(f"{D} samples is shorter than one window")
        return (D - self.window_length) // self.stride + 1


@dataclass
class WindowResult:
    index: int
    start: int
    graph: np.ndarray | None
    lambda2: float
    status: str
    reason: str = ""


def _window_covariance(W):
    Wc = W - W.mean(axis=1, keepdims=True)
    C = Wc @ Wc.T / W.shape[1]
    return 0.5 * (C + C.T)


def _one_window(X, start, index, plan):
    W = X[:, start : start + plan.window_length]
    C = _window_covariance(W)
    if np.any(np.diag(C) <= 0):
        warnings.warn(f"window {index}: constant node signal gives a degenerate covariance", stacklevel=3)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            G, status = learn_graph(plan.method, C, plan.window_length, plan.config)
        if not np.all(np.isfinite(G)):
            raise FloatingPointError("non-finite graph")
        return WindowResult(index, start, G, algebraic_connectivity(G), status)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("window %d failed: %s", index, exc)
        return WindowResult(index, start, None, float("nan"), "failed", str(exc))


def rolling_window_graphs(X, plan: RollingWindowPlan, workers=1):
    """Learn one graph per sliding window of the ``n x D`` signal matrix.

    A failing window is returned with ``status="failed"`` and its reason;
    the remaining windows still run. Results are ordered by window index
    regardless of ``workers``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ContractError("signals must be an n x D matrix")
    count = plan.count(X.shape[1])
    starts = [i * plan.stride for i in range(count)]
    if workers <= 1:
        return [_one_window(X, s, i, plan) for i, s in enumerate(starts)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: _one_window(X, a[1], a[0], plan), enumerate(starts)))
