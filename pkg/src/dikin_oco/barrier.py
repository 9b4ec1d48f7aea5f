"""Feasible-set descriptions and their self-concordant log barriers."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import NotInterior, NotPositiveDefinite, NotUnit, PreconditionError

INTERIOR_TOL = _kernels.INTERIOR_TOL


@dataclass(frozen=True, eq=False)
class Domain:
    """A bounded convex set: a polytope ``{x | Ax >= b}`` (boxes included) or a Euclidean ball.

    Build instances through :meth:`polytope`, :meth:`box` or :meth:`ball`.
    """

    kind: str
    A: np.ndarray = None
    b: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    center: np.ndarray = None
    radius: float = None

    @classmethod
    def polytope(cls, A, b):
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float, ndmin=1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("polytope data must be finite")
        return cls("polytope", A=A, b=b)

    @classmethod
    def box(cls, lower, upper):
        lower = np.array(lower, dtype=float, ndmin=1)
        upper = np.array(upper, dtype=float, ndmin=1)
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have the same shape")
        if not np.all(lower < upper):
            raise ValueError("box bounds must satisfy lower < upper per coordinate")
        return cls("box", lower=lower, upper=upper)

    @classmethod
    def ball(cls, center, radius):
        center = np.array(center, dtype=float, ndmin=1)
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        return cls("ball", center=center, radius=float(radius))

    @property
    def dim(self):
        if self.kind == "polytope":
            return self.A.shape[1]
        if self.kind == "box":
            return self.lower.shape[0]
        return self.center.shape[0]

    @property
    def n_constraints(self):
        if self.kind == "polytope":
            return self.A.shape[0]
        if self.kind == "box":
            return 2 * self.dim
        return 1

    def constraints(self):
        """Return ``(A, b)`` for polyhedral domains (boxes are expanded)."""
        if self.kind == "polytope":
            return self.A, self.b
        if self.kind == "box":
            eye = np.eye(self.dim)
            return np.vstack([eye, -eye]), np.concatenate([self.lower, -self.upper])
        raise TypeError("a ball has no linear constraint description")

    def min_slack(self, x):
        """Smallest constraint slack at ``x`` (``r - ||x - c||`` for balls).

        Accepts a single point or a stack of points along the first axis.
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "polytope":
            return (x @ self.A.T - self.b).min(axis=-1)
        if self.kind == "box":
            return np.minimum(x - self.lower, self.upper - x).min(axis=-1)
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def is_interior(self, x):
        return bool(self.min_slack(x) > INTERIOR_TOL)

    def contains(self, x, tol=1e-9):
        return bool(self.min_slack(x) >= -tol)

    def default_start(self):
        """Centre of a box or ball; ``None`` for polytopes (caller must supply one)."""
        if self.kind == "box":
            return 0.5 * (self.lower + self.upper)
        if self.kind == "ball":
            return self.center.copy()
        return None

    def bounding_box(self):
        """Per-coordinate extents ``(lo, hi)``; LP-based for polytopes."""
        if self.kind == "box":
            return self.lower.copy(), self.upper.copy()
        if self.kind == "ball":
            return self.center - self.radius, self.center + self.radius
        from .geometry import polytope_bounding_box

        return polytope_bounding_box(self.A, self.b)

    def sample_interior(self, rng, size):
        """Uniform samples from the interior (rejection sampling for polytopes)."""
        n = self.dim
        if self.kind == "box":
            return self.lower + (self.upper - self.lower) * rng.uniform(size=(size, n))
        if self.kind == "ball":
            d = rng.standard_normal((size, n))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = self.radius * rng.uniform(size=(size, 1)) ** (1.0 / n)
            return self.center + r * d
        lo, hi = self.bounding_box()
        out = []
        have = 0
        for _ in range(10_000):
            cand = lo + (hi - lo) * rng.uniform(size=(max(4 * size, 64), n))
            cand = cand[self.min_slack(cand) > INTERIOR_TOL]
            out.append(cand)
            have += len(cand)
            if have >= size:
                return np.concatenate(out)[:size]
        raise RuntimeError("rejection sampling failed; polytope interior is too thin")

    def to_dict(self):
        if self.kind == "polytope":
            return {"kind": "polytope", "A": self.A.tolist(), "b": self.b.tolist()}
        if self.kind == "box":
            return {"kind": "box", "bounds": np.column_stack([self.lower, self.upper]).tolist()}
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


def interval(lo=-1.0, hi=1.0):
    """One-dimensional box ``[lo, hi]``."""
    return Domain.box([lo], [hi])


@dataclass(frozen=True)
class BarrierEval:
    """Value, gradient and Hessian of a barrier at one interior point."""

    x: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    min_slack: float


def _evaluate(domain, x, kernels):
    x = np.ascontiguousarray(x, dtype=float)
    if domain.kind == "polytope":
        res = kernels["polytope"](domain.A, domain.b, x)
    elif domain.kind == "box":
        res = kernels["box"](domain.lower, domain.upper, x)
    else:
        res = kernels["ball"](domain.center, domain.radius, x)
    smin, value, grad, hess = res
    if not smin > INTERIOR_TOL:
        raise NotInterior(smin)
    return BarrierEval(x, float(value), grad, hess, float(smin))


def eval_polytope_barrier(domain, x):
    """``-sum(log(Ax - b))`` with its gradient and Hessian. Boxes use O(n) forms."""
    if domain.kind not in ("polytope", "box"):
        raise TypeError("expected a polyhedral domain")
    return _evaluate(domain, x, _kernels.KERNELS)


def eval_ball_barrier(domain, x):
    """``-log(r^2 - ||x - c||^2)`` with its gradient and Hessian."""
    if domain.kind != "ball":
        raise TypeError("expected a ball domain")
    return _evaluate(domain, x, _kernels.KERNELS)


def default_theta(domain):
    if domain.kind == "ball":
        return 1.0
    return float(domain.n_constraints)


class Barrier:
    """Self-concordant barrier for a :class:`Domain`.

    Carries the self-concordance parameter ``theta`` and the diameter bound
    used for tuning. ``diameter`` defaults to :func:`geometry.diameter`; pass
    a known value to skip the computation for large polytopes.
    """

    def __init__(self, domain, theta=None, diameter=None, backend=None):
        self.domain = domain
        self.theta = default_theta(domain) if theta is None else float(theta)
        if diameter is None:
            from .geometry import diameter as _diameter

            diameter = _diameter(domain)
        self.diameter = float(diameter)
        self._kernels = _kernels.BACKENDS[backend] if backend else _kernels.KERNELS

    def __repr__(self):
        return f"Barrier({self.domain.kind}, n={self.domain.dim}, theta={self.theta:g}, diameter={self.diameter:.6g})"

    def evaluate(self, x):
        return _evaluate(self.domain, x, self._kernels)

    def value(self, x):
        return self.evaluate(x).value

    def gradient(self, x):
        return self.evaluate(x).gradient

    def hessian(self, x):
        return self.evaluate(x).hessian


def hessian_solve(hessian, g):
    """Solve ``hessian @ v = g`` by Cholesky; raise if not positive definite."""
    try:
        c = scipy.linalg.cho_factor(hessian, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    v = scipy.linalg.cho_solve(c, g, check_finite=False)
    if not np.all(np.isfinite(v)):
        raise NotPositiveDefinite("non-finite solution")
    return v


def cholesky(hessian):
    try:
        return np.linalg.cholesky(hessian)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def boundary_distance(domain, x):
    """Euclidean distance from ``x`` to the boundary of ``domain``."""
    if domain.kind == "polytope":
        s = domain.A @ x - domain.b
        return float((s / np.linalg.norm(domain.A, axis=1)).min())
    return float(domain.min_slack(x))


@dataclass(frozen=True)
class DerivativeReport:
    gradient_rel_error: float
    hessian_rel_error: float
    step: float

    def passed(self, tol=1e-5):
        return self.gradient_rel_error <= tol and self.hessian_rel_error <= tol


def check_derivatives(barrier, x, h=1e-5):
    """Compare analytic derivatives with central finite differences.

    The step is ``h`` scaled by the distance to the boundary when that
    distance is below one, so that every probe stays interior. Errors are
    max-abs differences relative to ``max(1, max|analytic|)``.
    """
    if not 1e-7 <= h <= 1e-3:
        raise PreconditionError("finite-difference scale h must lie in [1e-7, 1e-3]")
    x = np.asarray(x, dtype=float)
    ev = barrier.evaluate(x)
    step = h * min(1.0, boundary_distance(barrier.domain, x))
    n = x.size
    fd_grad = np.empty(n)
    fd_hess = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        hi = barrier.evaluate(x + e)
        lo = barrier.evaluate(x - e)
        fd_grad[i] = (hi.value - lo.value) / (2 * step)
        fd_hess[:, i] = (hi.gradient - lo.gradient) / (2 * step)
    g_err = np.abs(fd_grad - ev.gradient).max() / max(1.0, np.abs(ev.gradient).max())
    h_err = np.abs(fd_hess - ev.hessian).max() / max(1.0, np.abs(ev.hessian).max())
    return DerivativeReport(float(g_err), float(h_err), step)


@dataclass(frozen=True)
class SelfConcordanceReport:
    first: float
    second: float
    third: float
    concordance_ratio: float
    theta_ratio: float

    def passed(self, tol=1e-4):
        return self.concordance_ratio <= 1 + tol and self.theta_ratio <= 1 + tol


def check_self_concordance(barrier, x, u, theta=None):
    """Directional derivatives of ``t -> R(x + t u)`` at 0 and the two ratios.

    ``concordance_ratio = |f'''| / (2 f''^1.5)`` and
    ``theta_ratio = f'^2 / (theta f'')``; a theta-self-concordant barrier
    keeps both at or below one. The third derivative is a central difference
    of ``u' H(x + t u) u`` with ``t = 1e-4 / sqrt(f'')``.
    """
    theta = barrier.theta if theta is None else float(theta)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise NotUnit(f"direction has norm {np.linalg.norm(u)!r}")
    ev = barrier.evaluate(x)
    d1 = float(u @ ev.gradient)
    d2 = float(u @ ev.hessian @ u)
    t = 1e-4 / np.sqrt(d2)
    hp = barrier.hessian(x + t * u)
    hm = barrier.hessian(x - t * u)
    d3 = float((u @ hp @ u - u @ hm @ u) / (2 * t))
    return SelfConcordanceReport(
        first=d1,
        second=d2,
        third=d3,
        concordance_ratio=abs(d3) / (2 * d2**1.5),
        theta_ratio=d1 * d1 / (theta * d2),
    )
