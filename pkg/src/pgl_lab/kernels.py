"""Hot loops of the projection machinery, compiled and pure-numpy variants.

Both variants are always importable (``*_numba`` / ``*_numpy``) so they can be
benchmarked against each other; the unsuffixed names dispatch on the backend
chosen in :mod:`pgl_lab._accel`.
"""

import numpy as np

from ._accel import BACKEND, njit

# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


def project_rows_numpy(A):
    """Row-wise projection onto {x >= 0, x_i = 0, sum(x) >= 1} for row i."""
    n = A.shape[0]
    B = np.array(A, dtype=np.float64)
    np.fill_diagonal(B, -np.inf)
    clipped = np.maximum(B, 0.0)
    out = clipped.copy()
    short = clipped.sum(axis=1) < 1.0
    if np.any(short):
        s = -np.sort(-B[short], axis=1)[:, : n - 1]
        cs = np.cumsum(s, axis=1)
        k = np.arange(1, n)
        phis = (1.0 - cs) / k
        # last index where the sorted entry stays active
        active = s + phis > 0.0
        kstar = n - 2 - np.argmax(active[:, ::-1], axis=1)
        phi = phis[np.arange(s.shape[0]), kstar]
        out[short] = np.maximum(B[short] + phi[:, None], 0.0)
    np.fill_diagonal(out, 0.0)
    return out


def dykstra_numpy(A, max_iters, tol):
    x = np.array(A, dtype=np.float64)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    disp = np.inf
    it = 0
    converged = False
    for it in range(1, max_iters + 1):
        t = x + p
        y = 0.5 * (t + t.T)
        p = t - y
        t = y + q
        xn = project_rows_numpy(t)
        q = t - xn
        disp = np.linalg.norm(xn - x)
        gap = np.linalg.norm(xn - y)
        x = xn
        # a still iterate is not enough: the corrections may not have settled
        if disp < tol and gap < tol:
            converged = True
            break
    return x, p, q, it, disp, converged


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------


@njit(cache=True)
def _row_into(A, i, out, buf):
    n = A.shape[0]
    m = 0
    pos = 0.0
    for j in range(n):
        if j != i:
            v = A[i, j]
            buf[m] = v
            m += 1
            if v > 0.0:
                pos += v
    if pos >= 1.0:
        for j in range(n):
            v = A[i, j]
            out[i, j] = v if v > 0.0 else 0.0
        out[i, i] = 0.0
        return
    s = np.sort(buf[:m])
    cs = 0.0
    phi = 0.0
    for k in range(1, m + 1):
        cs += s[m - k]
        cand = (1.0 - cs) / k
        if s[m - k] + cand > 0.0:
            phi = cand
    for j in range(n):
        v = A[i, j] + phi
        out[i, j] = v if v > 0.0 else 0.0
    out[i, i] = 0.0


@njit(cache=True)
def project_rows_numba(A):
    n = A.shape[0]
    out = np.empty((n, n))
    buf = np.empty(max(n - 1, 1))
    for i in range(n):
        _row_into(A, i, out, buf)
    return out


@njit(cache=True)
def dykstra_numba(A, max_iters, tol):
    n = A.shape[0]
    x = A.astype(np.float64).copy()
    p = np.zeros((n, n))
    q = np.zeros((n, n))
    y = np.empty((n, n))
    t = np.empty((n, n))
    xn = np.empty((n, n))
    buf = np.empty(max(n - 1, 1))
    disp = np.inf
    it = 0
    converged = False
    for it in range(1, max_iters + 1):
        for i in range(n):
            for j in range(n):
                t[i, j] = x[i, j] + p[i, j]
        for i in range(n):
            for j in range(n):
                y[i, j] = 0.5 * (t[i, j] + t[j, i])
        for i in range(n):
            for j in range(n):
                p[i, j] = t[i, j] - y[i, j]
                t[i, j] = y[i, j] + q[i, j]
        for i in range(n):
            _row_into(t, i, xn, buf)
        acc = 0.0
        gap = 0.0
        for i in range(n):
            for j in range(n):
                q[i, j] = t[i, j] - xn[i, j]
                d = xn[i, j] - x[i, j]
                acc += d * d
                d = xn[i, j] - y[i, j]
                gap += d * d
                x[i, j] = xn[i, j]
        disp = np.sqrt(acc)
        if disp < tol and np.sqrt(gap) < tol:
            converged = True
            break
    return x, p, q, it, disp, converged


if BACKEND == "numba":
    project_rows = project_rows_numba
    dykstra = dykstra_numba
else:
    project_rows = project_rows_numpy
    dykstra = dykstra_numpy
