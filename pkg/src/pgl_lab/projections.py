"""Projection operators onto the GSO feasible set and its pieces.

The feasible set for an estimated adjacency matrix is the intersection of the
symmetric matrices (``S_A``) with the hollow nonnegative matrices whose rows
each sum to at least one (``S_B``). The projection onto ``S_B`` separates over
rows and has a closed form up to a scalar shift found by sorting.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph_domain import ContractError, _square


@dataclass(frozen=True, eq=False)
class DykstraState:
    X: np.ndarray
    corr_sym: np.ndarray
    corr_rows: np.ndarray
    iterations: int
    displacement: float
    converged: bool


def project_sym(A):
    A = _square(A)
    return 0.5 * (A + A.T)


def _phi_bisect(v, tol=1e-14, max_iter=200):
    lo = -np.max(v)
    hi = lo + 1.0  # largest entry alone reaches 1 here
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.maximum(v + mid, 0.0).sum() < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def solve_phi(a, j):
    """Shift ``phi`` with ``sum_{i != j} max(a_i + phi, 0) == 1``.

    Breakpoint scan over the sorted entries; falls back to bisection if the
    scan's root misses by more than 1e-12 (ties, huge magnitudes).
    """
    a = np.asarray(a, dtype=np.float64)
    v = np.delete(a, j)
    if v.size == 0:
        raise ContractError("row needs at least one off-diagonal entry")
    if np.maximum(v, 0.0).sum() >= 1.0:
        raise ContractError("solve_phi requires sum of positive parts < 1")
    s = np.sort(v)[::-1]
    cs = np.cumsum(s)
    k = np.arange(1, s.size + 1)
    phis = (1.0 - cs) / k
    kstar = np.nonzero(s + phis > 0.0)[0][-1]
    phi = float(phis[kstar])
    if abs(np.maximum(v + phi, 0.0).sum() - 1.0) > 1e-12:
        phi = float(_phi_bisect(v))
    return phi


def project_row(a, j):
    """Nearest point to ``a`` with ``x_j = 0``, other entries >= 0, sum >= 1."""
    a = np.asarray(a, dtype=np.float64)
    mask = np.arange(a.size) != j
    x = np.zeros_like(a)
    if np.maximum(a[mask], 0.0).sum() >= 1.0:
        x[mask] = np.maximum(a[mask], 0.0)
    else:
        x[mask] = np.maximum(a[mask] + solve_phi(a, j), 0.0)
    return x


def project_SB(A):
    A = _square(A)
    if A.shape[0] < 2:
        raise ContractError("S_B is empty for a single node")
    return kernels.project_rows(np.ascontiguousarray(A))


def project_S_dykstra(A, max_iters=1000, tol=1e-9):
    """Nearest point of ``S_A ∩ S_B`` by Dykstra's alternating projections.

    The returned iterate comes from the ``S_B`` step and is symmetrised once
    more, so it is exactly symmetric and hollow; row sums hold to ``tol``.
    Check ``converged`` when the iteration budget may be too small.
    """
    A = _square(A)
    if A.shape[0] < 2:
        raise ContractError("S is empty for a single node")
    X, p, q, it, disp, ok = kernels.dykstra(np.ascontiguousarray(A), int(max_iters), float(tol))
    X = 0.5 * (X + X.T)
    return DykstraState(X, p, q, int(it), float(disp), bool(ok))


def alternating_projection(A, max_iters=1000, tol=1e-9):
    """Plain alternation between ``S_A`` and ``S_B`` without corrections.

    Lands in the intersection but generally not at the nearest point; kept as
    a reference for comparisons with :func:`project_S_dykstra`.
    """
    X = _square(A).copy()
    for _ in range(max_iters):
        Xn = project_SB(project_sym(X))
        if np.linalg.norm(Xn - X) < tol:
            X = Xn
            break
        X = Xn
    return 0.5 * (X + X.T)


def project_frobenius_ball(A, delta):
    if delta <= 0:
        raise ContractError("delta must be positive")
    A = np.asarray(A, dtype=np.float64)
    nrm = np.linalg.norm(A)
    if nrm > delta:
        return (delta / nrm) * A
    return A.copy()
