"""Local-norm geometry of a barrier: Dikin ellipsoids, boundary rays,
Bregman divergences, inner subsets and property checks."""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .barrier import INTERIOR_TOL, cholesky
from .errors import NotInterior, NotUnit, PreconditionError, Unbounded

MAX_VERTEX_COMBINATIONS = 20_000


@dataclass
class PropertyReport:
    """Outcome of one numerical property check.

    ``worst_slack`` is the smallest observed margin (bound minus measured,
    so negative means violated); ``passed`` compares it to ``tolerance``.
    """

    name: str
    worst_slack: float
    tolerance: float
    samples: int
    skipped: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(np.isfinite(self.worst_slack) and self.worst_slack >= -self.tolerance)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "skipped": self.skipped,
            "details": self.details,
        }


# ------------------------------------------------------------- polytopes


def polytope_bounding_box(A, b):
    """Per-coordinate extents of ``{x | Ax >= b}`` from 2n linear programs."""
    n = A.shape[1]
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(n)
            c[j] = sign
            res = scipy.optimize.linprog(c, A_ub=-A, b_ub=-b, bounds=[(None, None)] * n, method="highs")
            if res.status == 3:
                raise Unbounded(f"polytope is unbounded along coordinate {j}")
            if res.status != 0:
                raise ValueError(f"bounding-box LP failed: {res.message}")
            out[j] = sign * res.fun
    return lo, hi


def polytope_vertices(A, b, tol=1e-9):
    """Vertices of a bounded polytope by enumerating n-row active sets."""
    m, n = A.shape
    found = []
    for rows in itertools.combinations(range(m), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, b[list(rows)])
        if (A @ v - b).min() < -tol * max(1.0, np.abs(b).max()):
            continue
        if not any(np.linalg.norm(v - w) <= 1e-9 for w in found):
            found.append(v)
    return np.array(found).reshape(-1, n)


def _vertex_enumeration_is_cheap(A):
    m, n = A.shape
    return math.comb(m, n) <= MAX_VERTEX_COMBINATIONS


def diameter(domain):
    """Euclidean diameter of a box or ball; for polytopes the exact value when
    vertex enumeration is cheap, else the bounding-box diagonal (an upper bound).
    """
    if domain.kind == "box":
        return float(np.linalg.norm(domain.upper - domain.lower))
    if domain.kind == "ball":
        return 2.0 * domain.radius
    lo, hi = polytope_bounding_box(domain.A, domain.b)
    if _vertex_enumeration_is_cheap(domain.A):
        V = polytope_vertices(domain.A, domain.b)
        if len(V) >= 2:
            diff = V[:, None, :] - V[None, :, :]
            return float(np.sqrt((diff**2).sum(-1)).max())
    return float(np.linalg.norm(hi - lo))


# ------------------------------------------------------------- local norms, rays


def local_norm(ev, h):
    """``sqrt(h' H h)`` for the Hessian stored in ``ev``."""
    h = np.asarray(h, dtype=float)
    return float(np.sqrt(max(h @ ev.hessian @ h, 0.0)))


def _require_interior(domain, x):
    smin = float(domain.min_slack(x))
    if not smin > INTERIOR_TOL:
        raise NotInterior(smin)


def ray_to_boundary(domain, x, u, diameter=None):
    """Largest ``t`` with ``x + t u`` in the domain, for a unit vector ``u``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _require_interior(domain, x)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise NotUnit(f"direction has norm {np.linalg.norm(u)!r}")
    if domain.kind == "ball":
        z = x - domain.center
        q = domain.radius**2 - z @ z
        bz = z @ u
        root = np.sqrt(bz * bz + q)
        t = q / (bz + root) if bz > 0 else root - bz
    elif domain.kind == "box":
        with np.errstate(divide="ignore", invalid="ignore"):
            t_up = np.where(u > 0, (domain.upper - x) / u, np.inf)
            t_dn = np.where(u < 0, (domain.lower - x) / u, np.inf)
        t = min(t_up.min(), t_dn.min())
    else:
        Au = domain.A @ u
        blocking = Au < 0
        if not blocking.any():
            raise Unbounded("ray never leaves the polytope")
        t = ((domain.A @ x - domain.b)[blocking] / -Au[blocking]).min()
    t = float(t)
    if diameter is not None and t > diameter * (1 + 1e-9):
        raise RuntimeError(f"ray length {t} exceeds the domain diameter {diameter}; inconsistent geometry")
    return t


def tau_max(domain, x, y):
    """Distance from ``x`` to the boundary in the direction of ``y``; 0 if ``y == x``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(y, dtype=float) - x
    dist = np.linalg.norm(d)
    if dist == 0.0:
        return 0.0
    return ray_to_boundary(domain, x, d / dist)


def in_inner_subset(domain, x1, y, delta):
    """Membership of ``y`` in ``{y : ||y - x1|| <= tau_max(x1, y) / (1 + delta)}``."""
    dist = float(np.linalg.norm(np.asarray(y, dtype=float) - x1))
    if dist == 0.0:
        return True
    return dist <= tau_max(domain, x1, y) / (1.0 + delta) * (1 + 1e-12)


def bregman_divergence(barrier, x, y):
    """``R(x) - R(y) - grad R(y)'(x - y)``."""
    ex = barrier.evaluate(x)
    ey = barrier.evaluate(y)
    return float(ex.value - ey.value - ey.gradient @ (ex.x - ey.x))


def three_point_residual(barrier, x, y, z):
    """Residual of ``B(x,y) - B(x,z) + B(y,z) = (x-y)'(grad R(z) - grad R(y))``."""
    lhs = bregman_divergence(barrier, x, y) - bregman_divergence(barrier, x, z) + bregman_divergence(barrier, y, z)
    rhs = (np.asarray(x) - y) @ (barrier.gradient(z) - barrier.gradient(y))
    return float(abs(lhs - rhs))


def comparator_shift(domain, x1, x_star, delta):
    """Pull ``x_star`` toward ``x1`` onto the boundary of the inner subset.

    Returns ``x1 + tau/(1+delta) * (x_star - x1)/||x_star - x1||`` with
    ``tau = tau_max(x1, x_star)``. The result is strictly interior and lies
    within ``delta * diameter`` of ``x_star``. If ``x_star == x1`` the
    start point is returned unchanged.
    """
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    x1 = np.asarray(x1, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if not domain.contains(x_star):
        raise PreconditionError("comparator is outside the domain")
    d = x_star - x1
    dist = np.linalg.norm(d)
    if dist == 0.0:
        return x1.copy()
    u = d / dist
    return x1 + ray_to_boundary(domain, x1, u) / (1.0 + delta) * u


# ------------------------------------------------------------- property checks


def hessian_sandwich_slack(barrier, x, h, chol=None):
    """Margins of ``(1-r)^2 H(x) <= H(x+h) <= (1-r)^-2 H(x)``, ``r = ||h||_x``.

    Both orderings are checked after whitening by the Cholesky factor of
    ``H(x)``; the upper one is rescaled by ``(1-r)^2`` so the margin stays O(1).
    Returns ``(lower_margin, upper_margin)``.
    """
    ev = barrier.evaluate(x)
    L = cholesky(ev.hessian) if chol is None else chol
    rho = local_norm(ev, h)
    Hh = barrier.hessian(np.asarray(x, dtype=float) + h)
    Y = np.linalg.solve(L, Hh)
    C = np.linalg.solve(L, Y.T)
    C = 0.5 * (C + C.T)
    lam = np.linalg.eigvalsh(C)
    f = (1.0 - rho) ** 2
    return float(lam[0] - f), float(1.0 - f * lam[-1])


def _unit_vectors(rng, count, n):
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def verify_dikin_and_hessian_bounds(barrier, x, samples, rng=None, max_radius=1 - 1e-6):
    """Sample steps inside the unit Dikin ellipsoid at ``x`` and check
    containment plus the Hessian sandwich; also checks the inverse-Hessian
    eigenvalue ceiling ``diameter**2``. Returns a dict of :class:`PropertyReport`.
    """
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.asarray(x, dtype=float)
    ev = barrier.evaluate(x)
    L = cholesky(ev.hessian)
    n = x.size
    W = _unit_vectors(rng, samples, n)
    radii = max_radius * rng.uniform(size=samples)
    H = np.linalg.solve(L.T, (W * radii[:, None]).T).T
    slacks = barrier.domain.min_slack(x + H)
    lower = np.inf
    upper = np.inf
    for h in H:
        lo, up = hessian_sandwich_slack(barrier, x, h, chol=L)
        lower = min(lower, lo)
        upper = min(upper, up)
    lam_min = np.linalg.eigvalsh(ev.hessian)[0]
    ceiling = barrier.diameter**2 - 1.0 / lam_min
    return {
        "dikin_containment": PropertyReport(
            "dikin_containment", float(slacks.min()), 0.0, samples,
            details={"min_slack": float(slacks.min())},
        ),
        "hessian_sandwich": PropertyReport(
            "hessian_sandwich", float(min(lower, upper)), 1e-8, samples,
            details={"lower": float(lower), "upper": float(upper)},
        ),
        "inverse_hessian_ceiling": PropertyReport("inverse_hessian_ceiling", float(ceiling), 1e-8, 1),
    }


@dataclass
class BoundaryReport:
    t_max: float
    tau_max: float
    gradient_ray_value: float
    ray_gradient_slack: float  # None when u' grad R(x) <= 0
    growth_slack: float
    inner_subset_slack: float

    @property
    def passed(self):
        checks = [self.growth_slack, self.inner_subset_slack]
        if self.ray_gradient_slack is not None:
            checks.append(self.ray_gradient_slack)
        return all(c >= -1e-8 for c in checks)


def verify_boundary_growth(barrier, x, u, theta=None, delta=1.0, fraction=0.9):
    """Check the three barrier growth bounds along the ray ``x + t u``.

    * ``u' grad R(x) <= theta / t_max`` (skipped when the left side is <= 0)
    * ``R(y) - R(x) <= -theta log(1 - s / t_max)`` at ``s = fraction * t_max``
    * ``R(y) - R(x) <= theta log(1 + 1/delta)`` at the edge of the inner subset
    """
    theta = barrier.theta if theta is None else float(theta)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    ev = barrier.evaluate(x)
    t_max = ray_to_boundary(barrier.domain, x, u)
    slope = float(u @ ev.gradient)
    ray_slack = theta / t_max - slope if slope > 0 else None
    s = fraction * t_max
    y = x + s * u
    growth = -math.log(1.0 - s / t_max) * theta - (barrier.value(y) - ev.value)
    y_in = x + t_max / (1.0 + delta) * u
    inner = math.log(1.0 + 1.0 / delta) * theta - (barrier.value(y_in) - ev.value)
    return BoundaryReport(t_max, tau_max(barrier.domain, x, y), slope, ray_slack, float(growth), float(inner))
