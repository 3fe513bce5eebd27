"""Independent reference solvers used only by the test suite."""

import itertools

import numpy as np


def phi_bisection(a, j, tol=1e-15):
    v = np.delete(np.asarray(a, dtype=float), j)
    lo, hi = -np.max(v), -np.max(v) + 1.0
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if np.maximum(v + mid, 0).sum() < 1:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo < 1e-300:
            break
    return 0.5 * (lo + hi)


def row_qp_enumeration(a, j):
    """Exact minimizer of 0.5||x - a||^2 s.t. x_j = 0, x >= 0, sum(x) >= 1.

    Tries every support set with the sum constraint active or inactive and
    keeps the best feasible candidate; exact for the small n used in tests.
    """
    a = np.asarray(a, dtype=float)
    idx = [i for i in range(a.size) if i != j]
    best, best_val = None, np.inf
    for r in range(1, len(idx) + 1):
        for supp in itertools.combinations(idx, r):
            supp = list(supp)
            for active in (False, True):
                x = np.zeros_like(a)
                if active:
                    u = (1.0 - a[supp].sum()) / len(supp)
                    if u < 0:
                        continue
                    x[supp] = a[supp] + u
                else:
                    x[supp] = a[supp]
                if np.any(x[supp] < -1e-15) or x.sum() < 1 - 1e-12:
                    continue
                val = np.sum((x - a) ** 2)
                if val < best_val - 1e-15:
                    best, best_val = x, val
    return best


def ball_projection_lagrange(M, delta):
    """Minimizer of ||P - M|| over ||P|| <= delta via the multiplier equation."""
    nrm = np.linalg.norm(M)
    if nrm <= delta:
        return M.copy()
    lo, hi = 0.0, nrm / delta
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        if nrm / (1 + lam) > delta:
            lo = lam
        else:
            hi = lam
    return M / (1 + 0.5 * (lo + hi))


def power_iteration(M, iters=5000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[0])
    # M^2 is PSD, so its dominant eigenvalue is |lambda|_max^2
    M2 = M @ M
    for _ in range(iters):
        x = M2 @ x
        x /= np.linalg.norm(x)
    return float(np.sqrt(x @ M2 @ x))


def central_difference(fun, X, h=1e-6):
    G = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        G[idx] = (fun(X + E) - fun(X - E)) / (2 * h)
    return G


def random_spd(n, rng, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.exp(rng.uniform(0, np.log(cond), n))
    return (Q * w) @ Q.T


def random_sym(n, rng):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def row_qp_projected_gradient(A, js, iters=20000):
    """Batch oracle for the row problem by projected gradient on its dual.

    For ``min 0.5||x - a||^2`` over ``x_j = 0, x >= 0, sum(x) >= 1`` the
    primal point for multiplier ``lam >= 0`` is ``max(a + lam, 0)`` off ``j``.
    The dual is concave with slope ``1 - sum(x(lam))`` and curvature at most
    ``n - 1``, so ascent with step ``1 / (n - 1)`` projected onto ``lam >= 0``
    converges. Rows of ``A`` are independent problems.
    """
    A = np.array(A, dtype=float)
    m, n = A.shape
    mask = np.ones_like(A, dtype=bool)
    mask[np.arange(m), js] = False
    lam = np.zeros(m)
    step = 1.0 / max(n - 1, 1)
    for _ in range(iters):
        X = np.where(mask, np.maximum(A + lam[:, None], 0.0), 0.0)
        new = np.maximum(lam + step * (1.0 - X.sum(axis=1)), 0.0)
        if np.max(np.abs(new - lam)) < 1e-15:
            lam = new
            break
        lam = new
    return np.where(mask, np.maximum(A + lam[:, None], 0.0), 0.0)


def cvx_s_block(T, rho, eta, delta):
    """Direct conic solve of the graph block with the precision held fixed."""
    import cvxpy as cp

    n = T.shape[0]
    S = cp.Variable((n, n), symmetric=True)
    cons = [S >= 0, cp.diag(S) == 0, cp.sum(S, axis=1) >= 1, cp.norm(T @ S - S @ T, "fro") <= delta]
    prob = cp.Problem(cp.Minimize(rho * cp.sum(S) + 0.5 * eta * cp.sum_squares(S)), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status != cp.OPTIMAL:
        raise RuntimeError(f"conic oracle status {prob.status}")
    return S.value, prob.value


def cvx_theta_block(S, sigma_hat, delta):
    """Direct conic solve of the precision block with the graph held fixed."""
    import cvxpy as cp

    n = S.shape[0]
    T = cp.Variable((n, n), PSD=True)
    cons = [cp.norm(T @ S - S @ T, "fro") <= delta]
    prob = cp.Problem(cp.Minimize(-cp.log_det(T) + cp.trace(sigma_hat @ T)), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status != cp.OPTIMAL:
        raise RuntimeError(f"conic oracle status {prob.status}")
    return T.value, prob.value


def near_stationary_pair(n, rng, noise=0.05):
    """A feasible graph and a precision that almost commutes with it."""
    S = np.zeros((n, n))
    S[np.arange(n - 1), np.arange(1, n)] = 1.0
    extra = np.triu(rng.random((n, n)) < 0.3, 2)
    S = S + extra
    S = S + S.T
    T = np.eye(n) + 0.3 * S / n + 0.05 * (S @ S) / n + noise * random_sym(n, rng)
    w = np.linalg.eigvalsh(T)
    if w[0] < 0.2:
        T += (0.2 - w[0]) * np.eye(n)
    return S, T
