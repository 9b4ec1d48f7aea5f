"""Property suite over the standard test domains, driven by ``dikin-oco verify``."""
import numpy as np

from .barrier import Barrier, BarrierEval, Domain, check_derivatives, check_self_concordance
from .geometry import (
    PropertyReport,
    _unit_vectors,
    bregman_divergence,
    three_point_residual,
    verify_boundary_growth,
    verify_dikin_and_hessian_bounds,
)
from .harness import ExperimentConfig, LearnerSpec, run_experiment, verify_trajectory_inequalities
from .losses import iid_linear_adversary


class ScaledGradientBarrier(Barrier):
    """Barrier whose reported gradient is multiplied by ``scale`` (fault injection)."""

    def __init__(self, base, scale):
        super().__init__(base.domain, base.theta, base.diameter)
        self.scale = scale

    def evaluate(self, x):
        ev = super().evaluate(x)
        return BarrierEval(ev.x, ev.value, ev.gradient * self.scale, ev.hessian, ev.min_slack)


def standard_domains():
    """The four domains the suite runs on: 1-D and 2-D boxes, unit disc, hexagon-like polytope."""
    angles = np.linspace(0, 2 * np.pi, 6, endpoint=False) + np.array([0.0, 0.1, -0.05, 0.2, 0.0, -0.15])
    A = np.column_stack([np.cos(angles), np.sin(angles)])
    b = -np.array([1.0, 0.8, 1.2, 0.9, 1.1, 1.0])
    return {
        "box1d": Domain.box([-1.0], [1.0]),
        "box2d": Domain.box([-1.0, -1.0], [1.0, 1.0]),
        "ball2d": Domain.ball([0.0, 0.0], 1.0),
        "polytope2d": Domain.polytope(A, b),
    }


def _derivatives(barrier, X, tol=1e-5):
    errs = np.array([max(r.gradient_rel_error, r.hessian_rel_error)
                     for r in (check_derivatives(barrier, x, 1e-5) for x in X)])
    return PropertyReport("derivatives", float(tol - errs.max()), 0.0, len(X),
                          details={"max_rel_error": float(errs.max())})


def _self_concordance(barrier, X, U):
    worst_c = worst_t = 0.0
    for x, u in zip(X, U):
        r = check_self_concordance(barrier, x, u)
        worst_c = max(worst_c, r.concordance_ratio)
        worst_t = max(worst_t, r.theta_ratio)
    return PropertyReport("self_concordance", float(1 + 1e-4 - max(worst_c, worst_t)), 0.0, len(X),
                          details={"max_concordance_ratio": worst_c, "max_theta_ratio": worst_t})


def _dikin(barrier, X, rng):
    contain = sandwich = np.inf
    for x in X:
        reps = verify_dikin_and_hessian_bounds(barrier, x, 1, rng)
        contain = min(contain, reps["dikin_containment"].worst_slack)
        sandwich = min(sandwich, reps["hessian_sandwich"].worst_slack)
    return (
        PropertyReport("dikin_containment", float(contain), 0.0, len(X)),
        PropertyReport("hessian_sandwich", float(sandwich), 1e-8, len(X)),
    )


def _eigen_bounds(barrier, X):
    d2 = barrier.diameter**2
    lam = np.array([np.linalg.eigvalsh(barrier.hessian(x))[0] for x in X])
    floor = (lam - 1.0 / d2).min()
    ceiling = (d2 - 1.0 / lam).min()
    return PropertyReport("eigenvalue_bounds", float(min(floor, ceiling)), 1e-9, len(X),
                          details={"floor_slack": float(floor), "ceiling_slack": float(ceiling)})


def _boundary_growth(barrier, X, U):
    ray = growth = inner = np.inf
    skipped = 0
    for x, u in zip(X, U):
        r = verify_boundary_growth(barrier, x, u)
        if r.ray_gradient_slack is None:
            skipped += 1
        else:
            ray = min(ray, r.ray_gradient_slack)
        growth = min(growth, r.growth_slack)
        inner = min(inner, r.inner_subset_slack)
    return PropertyReport("boundary_growth", float(min(ray, growth, inner)), 1e-8, len(X), skipped,
                          details={"ray_gradient": float(ray), "growth": float(growth), "inner_subset": float(inner)})


def _bregman(barrier, X, Y, Z):
    worst_neg = np.inf
    worst_self = 0.0
    worst_res = 0.0
    for x, y, z in zip(X, Y, Z):
        worst_neg = min(worst_neg, bregman_divergence(barrier, x, y))
        worst_self = max(worst_self, abs(bregman_divergence(barrier, x, x)))
        worst_res = max(worst_res, three_point_residual(barrier, x, y, z))
    return (
        PropertyReport("bregman_nonnegative", float(min(worst_neg, 1e-12 - worst_self)), 0.0, len(X),
                       details={"min_divergence": float(worst_neg), "max_self_divergence": worst_self}),
        PropertyReport("bregman_three_point", float(1e-9 - worst_res), 0.0, len(X),
                       details={"max_residual": worst_res}),
    )


def run_verify_suite(samples=1000, seed=0, gradient_scale=1.0, horizon=1024, domains=None):
    """Run every property over the standard domains; returns a list of
    ``(domain, PropertyReport)`` rows."""
    rows = []
    rng = np.random.default_rng(seed)
    for dname, domain in standard_domains().items():
        if domains is not None and dname not in domains:
            continue
        barrier = Barrier(domain)
        if gradient_scale != 1.0:
            barrier = ScaledGradientBarrier(barrier, gradient_scale)
        n = domain.dim
        X = domain.sample_interior(rng, samples)
        U = _unit_vectors(rng, samples, n)
        rows.append((dname, _derivatives(barrier, X)))
        rows.append((dname, _self_concordance(barrier, X, U)))
        rows.extend((dname, r) for r in _dikin(barrier, X, rng))
        rows.append((dname, _eigen_bounds(barrier, X)))
        rows.append((dname, _boundary_growth(barrier, X, U)))
        Y = domain.sample_interior(rng, samples)
        Z = domain.sample_interior(rng, samples)
        rows.extend((dname, r) for r in _bregman(barrier, X, Y, Z))

    domain = standard_domains()["box2d"]
    cfg = ExperimentConfig(domain, iid_linear_adversary(horizon, 2), (LearnerSpec("ip"),), horizon, seed)
    trace = run_experiment(cfg)["ip"]
    barrier = Barrier(domain)
    comparator = domain.sample_interior(rng, 1)[0]
    for r in verify_trajectory_inequalities(trace, barrier, comparator, trace.tuning).values():
        rows.append(("box2d", r))
    rows.append(("box2d", PropertyReport(
        "ip_strict_feasibility", float(trace.min_slacks.min()), 0.0, horizon,
        details={"max_local_step_norm": float(trace.local_step_norms.max())},
    )))
    return rows


def format_table(rows):
    lines = [f"{'domain':<12} {'property':<24} {'samples':>7} {'worst slack':>13}  status"]
    for dname, r in rows:
        lines.append(f"{dname:<12} {r.name:<24} {r.samples:>7d} {r.worst_slack:>13.4e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
