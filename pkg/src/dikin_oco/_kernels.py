"""Barrier evaluation kernels.

Each kernel returns ``(min_slack, value, gradient, hessian)``. When the point is
not strictly interior (``min_slack <= INTERIOR_TOL``) the value is NaN and the
derivative arrays are zero; callers turn that into :class:`NotInterior`.

Two implementations exist with identical signatures: numba ``@njit`` kernels and
a pure-numpy path. Set ``DIKIN_OCO_JIT=0`` to force the numpy path; it is also
used automatically when numba cannot be imported.
"""
import os

import numpy as np

INTERIOR_TOL = 1e-12

_jit_env = os.environ.get("DIKIN_OCO_JIT", "1").strip().lower()
_JIT_REQUESTED = _jit_env not in ("0", "false", "no", "off")

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False


# ---------------------------------------------------------------- numpy path


def polytope_eval_np(A, b, x):
    s = A @ x - b
    smin = s.min()
    n = x.shape[0]
    if not smin > INTERIOR_TOL:
        return smin, np.nan, np.zeros(n), np.zeros((n, n))
    inv = 1.0 / s
    W = A * inv[:, None]
    return smin, -np.log(s).sum(), -W.sum(axis=0), W.T @ W


def box_eval_np(lower, upper, x):
    lo = x - lower
    hi = upper - x
    smin = min(lo.min(), hi.min())
    n = x.shape[0]
    if not smin > INTERIOR_TOL:
        return smin, np.nan, np.zeros(n), np.zeros((n, n))
    value = -np.log(lo).sum() - np.log(hi).sum()
    grad = 1.0 / hi - 1.0 / lo
    hess = np.diag(1.0 / lo**2 + 1.0 / hi**2)
    return smin, value, grad, hess


def ball_eval_np(center, radius, x):
    z = x - center
    zz = z @ z
    smin = radius - np.sqrt(zz)
    n = x.shape[0]
    if not smin > INTERIOR_TOL:
        return smin, np.nan, np.zeros(n), np.zeros((n, n))
    s = radius * radius - zz
    grad = 2.0 * z / s
    hess = (2.0 / s) * np.eye(n) + np.outer(grad, grad)
    return smin, -np.log(s), grad, hess


# ---------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @numba.njit(cache=True)
    def polytope_eval_nb(A, b, x):
        m, n = A.shape
        s = np.empty(m)
        smin = np.inf
        for i in range(m):
            acc = -b[i]
            for j in range(n):
                acc += A[i, j] * x[j]
            s[i] = acc
            if acc < smin:
                smin = acc
        grad = np.zeros(n)
        if not smin > INTERIOR_TOL:
            return smin, np.nan, grad, np.zeros((n, n))
        value = 0.0
        W = np.empty((m, n))
        for i in range(m):
            value -= np.log(s[i])
            inv = 1.0 / s[i]
            for j in range(n):
                w = A[i, j] * inv
                W[i, j] = w
                grad[j] -= w
        Wt = np.ascontiguousarray(W.T)
        hess = Wt @ W
        return smin, value, grad, hess

    @numba.njit(cache=True)
    def box_eval_nb(lower, upper, x):
        n = x.shape[0]
        smin = np.inf
        for j in range(n):
            smin = min(smin, x[j] - lower[j], upper[j] - x[j])
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        if not smin > INTERIOR_TOL:
            return smin, np.nan, grad, hess
        value = 0.0
        for j in range(n):
            lo = x[j] - lower[j]
            hi = upper[j] - x[j]
            value -= np.log(lo) + np.log(hi)
            grad[j] = 1.0 / hi - 1.0 / lo
            hess[j, j] = 1.0 / (lo * lo) + 1.0 / (hi * hi)
        return smin, value, grad, hess

    @numba.njit(cache=True)
    def ball_eval_nb(center, radius, x):
        n = x.shape[0]
        zz = 0.0
        for j in range(n):
            d = x[j] - center[j]
            zz += d * d
        smin = radius - np.sqrt(zz)
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        if not smin > INTERIOR_TOL:
            return smin, np.nan, grad, hess
        s = radius * radius - zz
        for j in range(n):
            grad[j] = 2.0 * (x[j] - center[j]) / s
        for i in range(n):
            for j in range(n):
                hess[i, j] = grad[i] * grad[j]
            hess[i, i] += 2.0 / s
        return smin, -np.log(s), grad, hess

else:  # pragma: no cover
    polytope_eval_nb = box_eval_nb = ball_eval_nb = None


BACKENDS = {
    "numpy": {"polytope": polytope_eval_np, "box": box_eval_np, "ball": ball_eval_np},
}
if NUMBA_AVAILABLE:
    BACKENDS["numba"] = {"polytope": polytope_eval_nb, "box": box_eval_nb, "ball": ball_eval_nb}

BACKEND = "numba" if (NUMBA_AVAILABLE and _JIT_REQUESTED) else "numpy"
KERNELS = BACKENDS[BACKEND]
