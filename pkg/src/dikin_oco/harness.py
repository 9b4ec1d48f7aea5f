"""Experiment orchestration: run learners against a shared loss sequence and
compare their regret (against the hindsight optimum) with the regret bounds."""
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .barrier import Barrier
from .errors import BadInterval, LengthMismatch, NotInterior, PreconditionError, UnsupportedComposition
from .geometry import PropertyReport, bregman_divergence
from .learners import (
    DoublingIPLearner,
    FTLLearner,
    IPLearner,
    OGDLearner,
    TuningConstants,
    linear_minimizer,
    minimize_quadratic,
    tune_rate,
)
from .losses import AdversaryScript, grad_bound, total_loss

log = logging.getLogger(__name__)

LEARNER_KINDS = ("ip", "ip_doubling", "ogd", "ftl")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    @property
    def name(self):
        return self.params.get("name", self.kind)


@dataclass(frozen=True)
class ExperimentConfig:
    domain: object
    adversary: AdversaryScript
    learners: tuple
    horizon: int
    seed: int = 0
    x1: np.ndarray = None
    theta: float = None
    diameter: float = None
    out_dir: str = None

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        names = [spec.name for spec in self.learners]
        if len(set(names)) != len(names):
            raise ValueError(f"learner names must be unique, got {names}")

    def start_point(self):
        x1 = self.domain.default_start() if self.x1 is None else np.asarray(self.x1, dtype=float)
        if x1 is None:
            raise PreconditionError("polytope experiments need an explicit interior x1")
        if not self.domain.is_interior(x1):
            raise NotInterior(self.domain.min_slack(x1), "x1 must be strictly interior")
        return x1

    def script(self):
        return replace(self.adversary, T=self.horizon, seed=self.seed)

    def losses(self):
        return self.script().losses(self.domain)

    def barrier(self):
        return Barrier(self.domain, theta=self.theta, diameter=self.diameter)

    def with_overrides(self, horizon=None, seed=None):
        cfg = self
        if horizon is not None:
            cfg = replace(cfg, horizon=int(horizon))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        return cfg


@dataclass
class Trace:
    """Per-round record of one learner's play (rows are rounds 1..T)."""

    learner: str
    iterates: np.ndarray
    gradients: np.ndarray
    losses: np.ndarray
    min_slacks: np.ndarray
    local_step_norms: np.ndarray
    final_x: np.ndarray
    tuning: TuningConstants = None
    epochs: list = None
    shrunk_steps: int = 0
    seconds: float = 0.0

    def __len__(self):
        return len(self.losses)

    @property
    def grad_norms(self):
        return np.linalg.norm(self.gradients, axis=1)


def build_learner(spec, barrier, G, horizon, x1):
    """Instantiate a learner; ``spec.params`` may override ``eta``, ``grad_bound``,
    ``theta``, ``diameter``, ``D`` (interior-point) or ``G0`` (doubling)."""
    p = spec.params
    if spec.kind not in LEARNER_KINDS:
        raise ValueError(f"unknown learner kind {spec.kind!r}")
    if spec.kind == "ip":
        tuning = tune_rate(
            p.get("theta", barrier.theta),
            p.get("grad_bound", G),
            p.get("diameter", barrier.diameter),
            horizon,
            D=p.get("D"),
        )
        if "eta" in p:
            tuning = replace(tuning, eta=float(p["eta"]), clamped=False)
        return IPLearner(barrier, tuning, x1, on_unsafe=p.get("on_unsafe", "shrink"))
    if spec.kind == "ip_doubling":
        return DoublingIPLearner(barrier, float(p.get("G0", 1.0)), horizon, x1)
    if spec.kind == "ogd":
        eta = p.get("eta", barrier.diameter / (G * math.sqrt(horizon)))
        return OGDLearner(barrier.domain, float(eta), x1)
    return FTLLearner(barrier.domain, x1)


def play(learner, losses, domain, name=None):
    """Run the full-information protocol for one learner."""
    T = len(losses)
    n = domain.dim
    X = np.empty((T, n))
    Gs = np.empty((T, n))
    L = np.empty(T)
    S = np.empty(T)
    local = np.empty(T)
    start = time.perf_counter()
    for t, f in enumerate(losses):
        x = learner.x
        X[t] = x
        S[t] = domain.min_slack(x)
        L[t] = f.value(x)
        Gs[t] = f.gradient(x)
        try:
            local[t] = learner.update(f)
        except NotInterior as exc:
            raise NotInterior(exc.min_slack, f"{name or learner.name}, round {t + 1}: {exc}") from exc
    seconds = time.perf_counter() - start
    state = learner.state
    return Trace(
        learner=name or learner.name,
        iterates=X,
        gradients=Gs,
        losses=L,
        min_slacks=S,
        local_step_norms=local,
        final_x=np.array(learner.x),
        tuning=getattr(state, "tuning", None),
        epochs=list(getattr(learner, "epochs", [])) or None,
        shrunk_steps=getattr(state, "shrunk_steps", 0),
        seconds=seconds,
    )


def run_experiment(config, losses=None, barrier=None):
    """Play every configured learner against the same loss sequence.

    Returns ``{learner name: Trace}`` in config order.
    """
    losses = config.losses() if losses is None else losses
    barrier = config.barrier() if barrier is None else barrier
    x1 = config.start_point()
    G = grad_bound(config.script(), config.domain, losses)
    G = G if G > 0 else 1.0
    traces = {}
    for spec in config.learners:
        learner = build_learner(spec, barrier, G, config.horizon, x1)
        traces[spec.name] = play(learner, losses, config.domain, spec.name)
    return traces


# ------------------------------------------------------------------ comparators


def hindsight_optimum(losses, domain):
    """Minimum-norm minimizer of the summed losses over ``domain``."""
    kinds = {f.kind for f in losses}
    if not kinds <= {"linear", "quadratic"}:
        raise UnsupportedComposition(f"cannot minimize sums of {sorted(kinds)} losses")
    total = total_loss(losses)
    if total.Q is None:
        return linear_minimizer(domain, total.c)
    return minimize_quadratic(domain, total.Q, total.c)


def grid_search_optimum(losses, domain, points=1_000_000, zoom_rounds=6):
    """Brute-force minimizer of the summed losses for ``n <= 3``.

    Evaluates a regular grid over the bounding box (endpoints included),
    keeps feasible points, re-grids a shrinking window around the incumbent,
    then polishes it with SLSQP under the domain constraints. Returns
    ``(x, value)``.
    """
    n = domain.dim
    if n > 3:
        raise UnsupportedComposition("grid search is limited to n <= 3")
    total = total_loss(losses)
    lo, hi = domain.bounding_box()
    per_axis = max(3, int(round(points ** (1.0 / n))))
    best_x, best_v = None, np.inf
    for _ in range(zoom_rounds + 1):
        axes = [np.linspace(lo[j], hi[j], per_axis) for j in range(n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        grid = grid[domain.min_slack(grid) >= 0]
        if len(grid):
            vals = total.value(grid)
            i = int(np.argmin(vals))
            if vals[i] < best_v:
                best_x, best_v = grid[i], float(vals[i])
        width = (hi - lo) / (per_axis - 1) * 4
        lo, hi = best_x - width, best_x + width
        glo, ghi = domain.bounding_box()
        lo, hi = np.maximum(lo, glo), np.minimum(hi, ghi)

    # Zooming alone stalls along directions where the objective is flat to
    # second order (e.g. a linear loss on a curved boundary).
    if domain.kind == "ball":
        cons = {"type": "ineq", "fun": lambda x: domain.radius**2 - (x - domain.center) @ (x - domain.center),
                "jac": lambda x: -2.0 * (x - domain.center)}
    else:
        A, b = domain.constraints()
        cons = {"type": "ineq", "fun": lambda x: A @ x - b, "jac": lambda x: A}
    res = scipy.optimize.minimize(total.value, best_x, jac=total.gradient, method="SLSQP",
                                  constraints=[cons], options={"ftol": 1e-15, "maxiter": 500})
    if domain.contains(res.x, tol=1e-12) and total.value(res.x) < best_v:
        best_x, best_v = res.x, float(total.value(res.x))
    return best_x, best_v


@dataclass
class RegretCurve:
    comparator: np.ndarray
    per_round: np.ndarray
    cumulative: np.ndarray

    @property
    def final(self):
        return float(self.cumulative[-1])


def regret_curve(trace, losses, x_star):
    """Cumulative regret ``R_t = sum_{s<=t} f_s(x_s) - f_s(x_star)``."""
    if len(trace) != len(losses):
        raise LengthMismatch(f"trace has {len(trace)} rounds, loss sequence has {len(losses)}")
    x_star = np.asarray(x_star, dtype=float)
    per_round = trace.losses - np.array([f.value(x_star) for f in losses])
    return RegretCurve(x_star, per_round, np.cumsum(per_round))


def subinterval_regret(trace, losses, s, t, domain):
    """Regret over rounds ``s..t`` (1-based, inclusive) against the best
    fixed point of that window."""
    T = len(losses)
    if not 1 <= s <= t <= T:
        raise BadInterval(f"need 1 <= s <= t <= {T}, got s={s}, t={t}")
    window = losses[s - 1 : t]
    x_opt = hindsight_optimum(window, domain)
    return float(math.fsum(trace.losses[s - 1 : t]) - total_loss(window).value(x_opt))


@dataclass(frozen=True)
class BoundValues:
    general: float
    interior: float = None


def theorem_bounds(theta, grad_bound, diameter, horizon, D=None):
    """Regret bounds for the interior-point learner.

    ``general = 9 sqrt(theta) G diam sqrt(T ln T) + 9 (G diam)^1.5 sqrt(T)``
    holds against any comparator in the domain; ``interior = 8 D G diam sqrt(T)``
    holds against interior comparators with ``D >= sqrt(B_R(x*, x1))``.
    """
    gd = grad_bound * diameter
    t1 = 9 * math.sqrt(theta) * gd * math.sqrt(horizon * math.log(horizon)) + 9 * gd**1.5 * math.sqrt(horizon)
    t2 = None if D is None else 8 * D * gd * math.sqrt(horizon)
    return BoundValues(t1, t2)


def verify_trajectory_inequalities(trace, barrier, comparator, tuning):
    """Check, round by round along an interior-point trace,

    ``eta g'(x_t - x*) - (grad R(x_{t+1}) - grad R(x_t))'(x* - x_t) <= 8 (eta G diam)^2``
    and ``B_R(x_t, x_{t+1}) <= 2 (eta G diam)^2``.
    """
    if tuning.step_product > 0.25 * (1 + 1e-12):
        raise PreconditionError(f"eta*G*diam = {tuning.step_product:.4g} exceeds 1/4")
    comparator = np.asarray(comparator, dtype=float)
    if not barrier.domain.is_interior(comparator):
        raise NotInterior(barrier.domain.min_slack(comparator), "comparator must be strictly interior")
    eta = tuning.eta
    slack_bound = 8 * tuning.step_product**2
    breg_bound = 2 * tuning.step_product**2
    X = np.vstack([trace.iterates, trace.final_x[None, :]])
    grads = [barrier.gradient(x) for x in X]
    step_slack = np.empty(len(trace))
    breg_slack = np.empty(len(trace))
    for t in range(len(trace)):
        x, x_next = X[t], X[t + 1]
        lhs = eta * trace.gradients[t] @ (x - comparator) - (grads[t + 1] - grads[t]) @ (comparator - x)
        step_slack[t] = slack_bound - lhs
        breg_slack[t] = breg_bound - bregman_divergence(barrier, x, x_next)
    return {
        "per_step_inequality": PropertyReport(
            "per_step_inequality", float(step_slack.min()), 1e-8, len(trace),
            details={"worst_round": int(np.argmin(step_slack)) + 1, "bound": slack_bound},
        ),
        "bregman_step_bound": PropertyReport(
            "bregman_step_bound", float(breg_slack.min()), 1e-8, len(trace),
            details={"worst_round": int(np.argmin(breg_slack)) + 1, "bound": breg_bound},
        ),
    }


# ------------------------------------------------------------------ summaries


@dataclass
class LearnerSummary:
    learner: str
    final_regret: float
    thm1_bound: float
    first_exceed_round: int = None
    min_slack: float = None
    max_local_step_norm: float = None
    seconds: float = 0.0

    @property
    def ratio(self):
        return self.final_regret / self.thm1_bound

    @property
    def within_bound(self):
        return self.first_exceed_round is None


def summarize(config, traces, losses, barrier=None, x_star=None):
    """Regret against the hindsight optimum and the first-order bound, per learner.

    Interior-point learners are checked against the bound computed from
    their own tuning constants; others get the bound from the experiment's
    barrier and certified gradient bound, for comparison only.
    """
    barrier = config.barrier() if barrier is None else barrier
    x_star = hindsight_optimum(losses, config.domain) if x_star is None else x_star
    G = grad_bound(config.script(), config.domain, losses)
    curves, out = {}, {}
    for name, tr in traces.items():
        curve = regret_curve(tr, losses, x_star)
        curves[name] = curve
        if tr.tuning is not None:
            tn = tr.tuning
            bound = theorem_bounds(tn.theta, tn.grad_bound, tn.diameter, config.horizon).general
        else:
            bound = theorem_bounds(barrier.theta, G or 1.0, barrier.diameter, config.horizon).general
        exceed = None
        if tr.tuning is not None:
            over = np.nonzero(curve.cumulative > bound)[0]
            exceed = int(over[0]) + 1 if len(over) else None
        local = tr.local_step_norms[np.isfinite(tr.local_step_norms)]
        out[name] = LearnerSummary(
            name,
            curve.final,
            bound,
            exceed,
            float(tr.min_slacks.min()),
            float(local.max()) if len(local) else None,
            tr.seconds,
        )
    return out, curves
