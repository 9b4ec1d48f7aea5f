"""Online learners: the barrier-preconditioned interior-point step, projected
online gradient descent, Follow-The-Leader, and a doubling-trick wrapper."""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .barrier import hessian_solve
from .errors import NotInterior, PreconditionError, StepUnsafe
from .geometry import _vertex_enumeration_is_cheap, polytope_vertices
from .losses import LossFunction

log = logging.getLogger(__name__)

SAFE_STEP_MARGIN = 1e-9
SHRUNK_LOCAL_NORM = 0.5
GRAD_BOUND_RTOL = 1e-12


@dataclass(frozen=True)
class TuningConstants:
    theta: float
    grad_bound: float
    diameter: float
    horizon: int
    D: float
    eta: float
    clamped: bool = False

    @property
    def step_product(self):
        """``eta * G * diameter``; at most 1/4 for a valid tuning."""
        return self.eta * self.grad_bound * self.diameter


def tune_rate(theta, grad_bound, diameter, horizon, D=None):
    """Learning rate ``eta = D / (sqrt(10) G diam sqrt(T))``.

    ``D`` defaults to ``sqrt(theta ln T + G diam)``. When ``eta G diam``
    would exceed 1/4, eta is clamped to ``1 / (4 G diam)`` and ``clamped`` set.
    """
    if not (theta > 0 and grad_bound > 0 and diameter > 0):
        raise PreconditionError("theta, grad_bound and diameter must be positive")
    if horizon < 2:
        raise PreconditionError("horizon must be >= 2")
    gd = grad_bound * diameter
    if D is None:
        D = math.sqrt(theta * math.log(horizon) + gd)
    eta = D / (math.sqrt(10.0) * gd * math.sqrt(horizon))
    clamped = eta * gd > 0.25
    if clamped:
        eta = 0.25 / gd
    return TuningConstants(float(theta), float(grad_bound), float(diameter), int(horizon), float(D), eta, clamped)


@dataclass(frozen=True)
class IPStepState:
    x: np.ndarray
    tuning: TuningConstants
    round: int = 1
    last_step_local_norm: float = 0.0
    shrunk_steps: int = 0


def ip_step(state, ev, g, domain=None, on_unsafe="shrink"):
    """One interior-point step ``x - eta H(x)^{-1} g``.

    ``ev`` is the barrier evaluated at ``state.x``. A step whose local norm
    reaches 1 either raises :class:`StepUnsafe` (``on_unsafe="raise"``) or is
    shrunk to local norm 1/2. If ``domain`` is given the new point is
    checked to be strictly interior.
    """
    g = np.asarray(g, dtype=float)
    eta = state.tuning.eta
    gnorm = float(np.linalg.norm(g))
    if gnorm > state.tuning.grad_bound * (1 + GRAD_BOUND_RTOL):
        log.debug("round %d: |g| = %.4g exceeds declared bound %.4g", state.round, gnorm, state.tuning.grad_bound)
    v = hessian_solve(ev.hessian, g)
    dual = float(max(g @ v, 0.0))
    local = eta * math.sqrt(dual)
    shrunk = state.shrunk_steps
    if local >= 1.0 - SAFE_STEP_MARGIN:
        if on_unsafe == "raise":
            raise StepUnsafe(local)
        log.warning("round %d: step local norm %.4g >= 1, shrinking to %.2g", state.round, local, SHRUNK_LOCAL_NORM)
        eta = eta * SHRUNK_LOCAL_NORM / local
        local = SHRUNK_LOCAL_NORM
        shrunk += 1
    x_new = state.x - eta * v
    if domain is not None:
        smin = float(domain.min_slack(x_new))
        if not smin > 0:
            raise NotInterior(smin, f"round {state.round}: iterate left the interior (min slack {smin:.3e})")
    return IPStepState(x_new, state.tuning, state.round + 1, local, shrunk)


# ------------------------------------------------------------------ projections


def project_polytope(A, b, y, tol=1e-12, max_sweeps=100_000):
    """Euclidean projection onto ``{x | Ax >= b}`` by Hildreth's dual
    coordinate ascent (each multiplier clamped at zero)."""
    y = np.asarray(y, dtype=float)
    if (A @ y - b).min() >= 0:
        return y.copy()
    norms2 = (A * A).sum(axis=1)
    lam = np.zeros(A.shape[0])
    x = y.copy()
    for _ in range(max_sweeps):
        biggest = 0.0
        for i in range(A.shape[0]):
            d = max(-lam[i], (b[i] - A[i] @ x) / norms2[i])
            if d != 0.0:
                lam[i] += d
                x += d * A[i]
                biggest = max(biggest, abs(d) * math.sqrt(norms2[i]))
        if biggest <= tol * max(1.0, np.abs(x).max()):
            break
    else:
        log.warning("polytope projection hit the sweep limit")
    return x


def project(domain, y):
    """Nearest point of ``domain`` to ``y``."""
    y = np.asarray(y, dtype=float)
    if domain.kind == "box":
        return np.clip(y, domain.lower, domain.upper)
    if domain.kind == "ball":
        z = y - domain.center
        r = np.linalg.norm(z)
        return y.copy() if r <= domain.radius else domain.center + z * (domain.radius / r)
    return project_polytope(domain.A, domain.b, y)


# ------------------------------------------------------------------ leaders


def linear_minimizer(domain, c):
    """Minimum-norm minimizer of ``c'x`` over ``domain``."""
    c = np.asarray(c, dtype=float)
    if domain.kind == "box":
        x = np.clip(0.0, domain.lower, domain.upper)
        return np.where(c > 0, domain.lower, np.where(c < 0, domain.upper, x))
    if domain.kind == "ball":
        nc = np.linalg.norm(c)
        if nc == 0.0:
            return project(domain, np.zeros_like(c))
        return domain.center - domain.radius * c / nc
    A, b = domain.A, domain.b
    if not c.any():
        return project(domain, np.zeros(domain.dim))
    scale = max(1.0, np.abs(c).sum())
    if _vertex_enumeration_is_cheap(A):
        V = polytope_vertices(A, b)
        vals = V @ c
        best = vals.min()
        ties = V[vals <= best + 1e-12 * scale]
        if len(ties) == 1:
            return ties[0].copy()
    else:
        res = scipy.optimize.linprog(c, A_ub=-A, b_ub=-b, bounds=[(None, None)] * domain.dim, method="highs")
        best = res.fun
    face_A = np.vstack([A, -c])
    face_b = np.append(b, -best - 1e-12 * scale)
    return project_polytope(face_A, face_b, np.zeros(domain.dim))


def minimize_quadratic(domain, Q, c, tol=1e-8, max_iter=100_000):
    """Minimizer of ``x'Qx/2 + c'x`` over ``domain`` by accelerated projected
    gradient, started from the minimum-norm point of the domain."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    lip = float(np.linalg.eigvalsh(Q)[-1]) if Q.size else 0.0
    if lip <= 1e-14:
        return linear_minimizer(domain, c)
    try:
        x_free = np.linalg.solve(Q, -c)
        if domain.contains(x_free, tol=0.0) and np.allclose(Q @ x_free, -c, atol=1e-12):
            return x_free
    except np.linalg.LinAlgError:
        pass
    x = project(domain, np.zeros_like(c))
    z = x.copy()
    k = 1.0
    for _ in range(max_iter):
        x_next = project(domain, z - (Q @ z + c) / lip)
        k_next = 0.5 * (1 + math.sqrt(1 + 4 * k * k))
        z = x_next + (k - 1) / k_next * (x_next - x)
        if (x_next - x) @ (Q @ x_next + c) > 0:  # restart when momentum points uphill
            z, k_next = x_next.copy(), 1.0
        step = np.linalg.norm(x_next - x)
        x, k = x_next, k_next
        if step <= tol * 1e-2:
            break
    return x


def ftl_step(history, domain):
    """Follow-The-Leader play: minimizer of the cumulative loss ``history``
    (a :class:`LossFunction`, e.g. from :func:`losses.total_loss`)."""
    if history.Q is None:
        return linear_minimizer(domain, history.c)
    return minimize_quadratic(domain, history.Q, history.c)


@dataclass(frozen=True)
class BaselineState:
    x: np.ndarray
    eta: float = 0.0
    c_sum: np.ndarray = None
    Q_sum: np.ndarray = None


def ogd_step(state, g, domain):
    """Projected online gradient descent: ``project(x - eta g)``."""
    return replace(state, x=project(domain, state.x - state.eta * np.asarray(g, dtype=float)))


# ------------------------------------------------------------------ drivers


class IPLearner:
    """Interior-point learner with fixed tuning."""

    name = "ip"

    def __init__(self, barrier, tuning, x1, on_unsafe="shrink"):
        self.barrier = barrier
        self.on_unsafe = on_unsafe
        x1 = np.asarray(x1, dtype=float)
        if not barrier.domain.is_interior(x1):
            raise NotInterior(barrier.domain.min_slack(x1), "x1 must be strictly interior")
        self.state = IPStepState(x1.copy(), tuning)

    @property
    def x(self):
        return self.state.x

    @property
    def tuning(self):
        return self.state.tuning

    def update(self, loss):
        """Observe ``loss`` at the current play and move; returns the step's local norm."""
        ev = self.barrier.evaluate(self.state.x)
        g = loss.gradient(self.state.x)
        self.state = ip_step(self.state, ev, g, self.barrier.domain, self.on_unsafe)
        return self.state.last_step_local_norm


class DoublingIPLearner(IPLearner):
    """Interior-point learner that doubles its gradient bound on violation.

    The iterate is kept across epochs; ``epochs`` lists the rounds at which a
    new bound took effect.
    """

    name = "ip_doubling"

    def __init__(self, barrier, G0, horizon, x1, on_unsafe="shrink"):
        if not G0 > 0:
            raise PreconditionError("G0 must be positive")
        self.horizon = horizon
        super().__init__(barrier, self._tune(barrier, G0, horizon), x1, on_unsafe)
        self.epochs = [1]

    @staticmethod
    def _tune(barrier, G, horizon):
        return tune_rate(barrier.theta, G, barrier.diameter, horizon)

    def observe_gradient_norm(self, gnorm):
        G = self.state.tuning.grad_bound
        if gnorm <= G * (1 + GRAD_BOUND_RTOL):  # unit vectors may round to 1 + ulp
            return False
        while G < gnorm:
            G *= 2.0
        self.state = replace(self.state, tuning=self._tune(self.barrier, G, self.horizon))
        self.epochs.append(self.state.round)
        log.info("round %d: gradient bound doubled to %g", self.state.round, G)
        return True

    def update(self, loss):
        self.observe_gradient_norm(float(np.linalg.norm(loss.gradient(self.state.x))))
        return super().update(loss)


class OGDLearner:
    name = "ogd"

    def __init__(self, domain, eta, x1):
        self.domain = domain
        self.state = BaselineState(project(domain, x1), eta)

    @property
    def x(self):
        return self.state.x

    def update(self, loss):
        self.state = ogd_step(self.state, loss.gradient(self.state.x), self.domain)
        return math.nan


class FTLLearner:
    name = "ftl"

    def __init__(self, domain, x1):
        self.domain = domain
        self.state = BaselineState(np.asarray(x1, dtype=float).copy(), 0.0, np.zeros(domain.dim), None)

    @property
    def x(self):
        return self.state.x

    def update(self, loss):
        c_sum = self.state.c_sum + loss.c
        Q_sum = self.state.Q_sum
        if loss.Q is not None:
            Q_sum = loss.Q.copy() if Q_sum is None else Q_sum + loss.Q
        cumulative = LossFunction("quadratic" if Q_sum is not None else "linear", c_sum, Q_sum)
        self.state = BaselineState(ftl_step(cumulative, self.domain), 0.0, c_sum, Q_sum)
        return math.nan
