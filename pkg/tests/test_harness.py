import math

import numpy as np
import pytest

from dikin_oco import (
    Barrier,
    Domain,
    ExperimentConfig,
    LearnerSpec,
    alternating_adversary,
    hindsight_optimum,
    iid_linear_adversary,
    interval,
    make_linear_loss,
    make_quadratic_loss,
    piecewise_linear_adversary,
    regret_curve,
    run_experiment,
    subinterval_regret,
    theorem_bounds,
    verify_trajectory_inequalities,
)
from dikin_oco.errors import BadInterval, LengthMismatch, NotInterior, PreconditionError, UnsupportedComposition
from dikin_oco.harness import grid_search_optimum, summarize
from dikin_oco.losses import AdversaryScript, total_loss

SQUARE = Domain.box([-1.0, -1.0], [1.0, 1.0])
THM1_SQUARE = 12137.1841743620  # theta=4, G=1, diam=2*sqrt(2), T=4096


def square_config(T=256, seed=0, learners=("ip",)):
    return ExperimentConfig(SQUARE, iid_linear_adversary(T, 2), tuple(LearnerSpec(k) for k in learners), T, seed)


class TestRunExperiment:
    def test_shape(self):
        cfg = ExperimentConfig(interval(), alternating_adversary(4), (LearnerSpec("ip"), LearnerSpec("ftl")), 4, x1=np.zeros(1))
        traces = run_experiment(cfg)
        assert list(traces) == ["ip", "ftl"]
        assert all(len(tr) == 4 for tr in traces.values())

    def test_bit_identical(self):
        a = run_experiment(square_config(learners=("ip", "ogd", "ftl")))
        b = run_experiment(square_config(learners=("ip", "ogd", "ftl")))
        for name in a:
            np.testing.assert_array_equal(a[name].iterates, b[name].iterates)
            np.testing.assert_array_equal(a[name].losses, b[name].losses)

    def test_seed_changes_sequence(self):
        a = run_experiment(square_config(seed=0))["ip"]
        b = run_experiment(square_config(seed=1))["ip"]
        assert not np.array_equal(a.losses, b.losses)

    def test_zero_adversary(self):
        cfg = ExperimentConfig(SQUARE, iid_linear_adversary(50, 2, radius=0.0), (LearnerSpec("ip"),), 50, x1=np.array([0.2, -0.3]))
        tr = run_experiment(cfg)["ip"]
        assert np.all(tr.iterates == np.array([0.2, -0.3]))

    def test_paired_losses(self):
        cfg = square_config(learners=("ip", "ftl"))
        losses = cfg.losses()
        traces = run_experiment(cfg, losses)
        for tr in traces.values():
            np.testing.assert_array_equal(tr.losses, [f.value(x) for f, x in zip(losses, tr.iterates)])

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            square_config(T=1)
        with pytest.raises(ValueError):
            square_config(learners=("ip", "ip"))
        with pytest.raises(NotInterior):
            run_experiment(ExperimentConfig(SQUARE, iid_linear_adversary(5, 2), (LearnerSpec("ip"),), 5, x1=np.array([1.0, 0.0])))

    def test_renamed_learners(self):
        cfg = ExperimentConfig(SQUARE, iid_linear_adversary(20, 2), (LearnerSpec("ip"), LearnerSpec("ip", {"name": "ip_fast", "eta": 0.05})), 20)
        traces = run_experiment(cfg)
        assert traces["ip_fast"].tuning.eta == 0.05


class TestHindsight:
    def test_sign_rule(self):
        np.testing.assert_array_equal(hindsight_optimum([make_linear_loss([2.0, -3.0])], SQUARE), [-1.0, 1.0])

    def test_alternating_cancels(self, box1d):
        fs = alternating_adversary(10).losses(box1d)
        x = hindsight_optimum(fs, box1d)
        assert x[0] == 0.0 and total_loss(fs).value(x) == 0.0

    def test_quadratic_mean(self, ball2d, rng):
        A = ball2d.sample_interior(rng, 5) * 0.5
        fs = [make_quadratic_loss(np.eye(2), -a, ball2d) for a in A]
        np.testing.assert_allclose(hindsight_optimum(fs, ball2d), A.mean(axis=0), atol=1e-12)

    @pytest.mark.parametrize("name", ["box1d", "box2d", "ball2d", "polytope2d"])
    def test_matches_grid_oracle(self, name, rng):
        from .conftest import DOMAINS

        dom = DOMAINS[name]()
        for _ in range(3):
            fs = [make_linear_loss(c) for c in rng.standard_normal((5, dom.dim))]
            x = hindsight_optimum(fs, dom)
            _, v_grid = grid_search_optimum(fs, dom)
            assert total_loss(fs).value(x) <= v_grid + 1e-6
            assert total_loss(fs).value(x) >= v_grid - 1e-6
            assert dom.contains(x, tol=1e-9)

    def test_grid_oracle_dimension_limit(self):
        dom = Domain.box([-1.0] * 4, [1.0] * 4)
        with pytest.raises(UnsupportedComposition):
            grid_search_optimum([make_linear_loss(np.ones(4))], dom)


class TestRegret:
    def test_identity(self):
        cfg = square_config(T=30)
        losses = cfg.losses()
        tr = run_experiment(cfg, losses)["ip"]
        tr.losses = np.array([f.value(np.zeros(2)) for f in losses])
        assert np.all(regret_curve(tr, losses, np.zeros(2)).cumulative == 0.0)

    def test_telescoping(self):
        cfg = square_config(T=1024, learners=("ip", "ftl"))
        losses = cfg.losses()
        x_star = hindsight_optimum(losses, SQUARE)
        for tr in run_experiment(cfg, losses).values():
            curve = regret_curve(tr, losses, x_star)
            raw = math.fsum(f.value(x) for f, x in zip(losses, tr.iterates)) - math.fsum(f.value(x_star) for f in losses)
            assert curve.final == pytest.approx(raw, rel=1e-10, abs=1e-10)
            np.testing.assert_allclose(np.diff(curve.cumulative), curve.per_round[1:], rtol=1e-9, atol=1e-9)

    def test_length_mismatch(self):
        cfg = square_config(T=10)
        losses = cfg.losses()
        tr = run_experiment(cfg, losses)["ip"]
        with pytest.raises(LengthMismatch):
            regret_curve(tr, losses[:-1], np.zeros(2))

    def test_ftl_alternating_thousand_rounds(self, box1d):
        T = 1000
        cfg = ExperimentConfig(box1d, alternating_adversary(T, first_scale=0.5), (LearnerSpec("ip"), LearnerSpec("ftl")), T, x1=np.zeros(1))
        losses = cfg.losses()
        traces = run_experiment(cfg, losses)
        x_star = hindsight_optimum(losses, box1d)
        assert regret_curve(traces["ftl"], losses, x_star).final >= 0.9 * (T - 1)
        tn = traces["ip"].tuning
        assert regret_curve(traces["ip"], losses, x_star).final <= theorem_bounds(tn.theta, tn.grad_bound, tn.diameter, T).general

    def test_sublinear_signature(self):
        avg = []
        for T in (1024, 4096):
            cfg = square_config(T=T)
            losses = cfg.losses()
            tr = run_experiment(cfg, losses)["ip"]
            avg.append(regret_curve(tr, losses, hindsight_optimum(losses, SQUARE)).final / T)
        assert avg[1] < avg[0]


class TestSubinterval:
    def setup_method(self):
        self.cfg = ExperimentConfig(
            SQUARE, piecewise_linear_adversary(200, [(100, [0.6, 0.8]), (100, [-0.6, -0.8])]),
            (LearnerSpec("ip"),), 200,
        )
        self.losses = self.cfg.losses()
        self.trace = run_experiment(self.cfg, self.losses)["ip"]

    def test_full_interval(self):
        x_star = hindsight_optimum(self.losses, SQUARE)
        full = regret_curve(self.trace, self.losses, x_star).final
        assert subinterval_regret(self.trace, self.losses, 1, 200, SQUARE) == pytest.approx(full, abs=1e-10)

    def test_single_round(self):
        for s in (1, 57, 200):
            r = subinterval_regret(self.trace, self.losses, s, s, SQUARE)
            f = self.losses[s - 1]
            assert r == pytest.approx(f.value(self.trace.iterates[s - 1]) + np.abs(f.c).sum())
            assert r >= 0

    def test_bad_interval(self):
        for s, t in [(0, 5), (5, 4), (1, 201)]:
            with pytest.raises(BadInterval):
                subinterval_regret(self.trace, self.losses, s, t, SQUARE)


class TestTheoremBounds:
    def test_square_reference(self):
        assert theorem_bounds(4, 1.0, 2 * math.sqrt(2), 4096).general == pytest.approx(THM1_SQUARE, rel=1e-12)

    def test_interior_bound(self):
        assert theorem_bounds(1, 1.0, 1.0, 100, D=1.0).interior == pytest.approx(80.0, rel=1e-15)

    def test_vanishing_scale(self):
        b = theorem_bounds(4, 1e-12, 1.0, 1000, D=1.0)
        assert b.general < 1e-8 and b.interior < 1e-8


class TestTrajectoryInequalities:
    def test_square_random(self):
        cfg = square_config(T=1024)
        tr = run_experiment(cfg)["ip"]
        reps = verify_trajectory_inequalities(tr, Barrier(SQUARE), np.zeros(2), tr.tuning)
        assert all(r.passed and r.worst_slack >= -1e-8 for r in reps.values())

    def test_zero_gradients(self):
        cfg = ExperimentConfig(SQUARE, iid_linear_adversary(20, 2, radius=0.0), (LearnerSpec("ip"),), 20)
        tr = run_experiment(cfg)["ip"]
        reps = verify_trajectory_inequalities(tr, Barrier(SQUARE), np.array([0.5, 0.5]), tr.tuning)
        assert all(r.worst_slack >= 0 for r in reps.values())

    def test_oversized_step_is_rejected(self):
        from dataclasses import replace

        tr = run_experiment(square_config(T=16))["ip"]
        bad = replace(tr.tuning, eta=0.3 / (tr.tuning.grad_bound * tr.tuning.diameter))
        with pytest.raises(PreconditionError):
            verify_trajectory_inequalities(tr, Barrier(SQUARE), np.zeros(2), bad)

    def test_boundary_comparator(self):
        tr = run_experiment(square_config(T=16))["ip"]
        with pytest.raises(NotInterior):
            verify_trajectory_inequalities(tr, Barrier(SQUARE), np.array([1.0, 0.0]), tr.tuning)


def test_summary_flags_only_tuned_learners():
    cfg = square_config(T=256, learners=("ip", "ftl"))
    losses = cfg.losses()
    summaries, curves = summarize(cfg, run_experiment(cfg, losses), losses)
    assert summaries["ip"].within_bound and summaries["ip"].ratio < 1
    assert summaries["ftl"].first_exceed_round is None
    assert set(curves) == {"ip", "ftl"}


@pytest.mark.parametrize("domain", [SQUARE, Domain.ball([0.0, 0.0], 1.0)])
def test_dikin_step_bound(domain):
    cfg = ExperimentConfig(domain, iid_linear_adversary(512, 2), (LearnerSpec("ip"),), 512, seed=7)
    tr = run_experiment(cfg)["ip"]
    assert np.all(tr.local_step_norms <= tr.tuning.step_product + 1e-9)
    assert np.all(tr.local_step_norms < 1)
    assert tr.min_slacks.min() > 0 and tr.shrunk_steps == 0
