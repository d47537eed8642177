import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldplab.costs import huber_cost, pseudo_huber_cost
from ldplab.oracles import AdditiveOracle, SphereNoise, TwoPointNoise
from ldplab.optimizers import (
    ClipSpec,
    RunConfig,
    ScheduleSpec,
    clip_bias_onset,
    clip_threshold,
    clip_vector,
    run_trajectory,
    simulate_runs,
    step_size,
)


def solvable_instance(method="vanilla", clip=None, T=12, seed=7, x1=(0.6, 0.0), G=1.0, n_eps=None):
    cost = huber_cost(G, 2)
    x1 = np.asarray(x1)
    oracle = AdditiveOracle(cost=cost, noise=TwoPointNoise(v=x1))
    if n_eps is None:
        n_eps = (float(np.dot(x1, x1)) / 2.0,)
    return RunConfig(
        method=method,
        cost=cost,
        oracle=oracle,
        init_x1=x1,
        horizon_T=T,
        step_schedule=ScheduleSpec(kind="sgd-sqrt", a=0.5),
        clip_schedule=clip,
        seed=seed,
        epsilon_grid=np.array(n_eps),
    )


class TestStepSize:
    def test_sgd_sqrt(self):
        assert step_size(ScheduleSpec(kind="sgd-sqrt", a=1.0), 1) == pytest.approx(
            1.0 / math.sqrt(2.0), abs=1e-12
        )

    def test_csgd_power_p2(self):
        # exponent p/(3p-2) = 1/2 at p = 2
        assert step_size(ScheduleSpec(kind="csgd-power", p=2.0), 3) == pytest.approx(0.5, abs=1e-12)

    def test_csgd_power_p15(self):
        # exponent 1.5/2.5 = 0.6
        assert step_size(ScheduleSpec(kind="csgd-power", p=1.5), 1) == pytest.approx(
            2.0**-0.6, abs=1e-12
        )

    def test_constant(self):
        assert step_size(ScheduleSpec(kind="constant", c=0.25), 17) == 0.25

    def test_t_must_be_positive(self):
        with pytest.raises(ValueError):
            step_size(ScheduleSpec(kind="constant", c=1.0), 0)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            ScheduleSpec(kind="csgd-power", p=2.5)
        with pytest.raises(ValueError):
            ScheduleSpec(kind="sgd-sqrt")
        with pytest.raises(ValueError):
            ScheduleSpec(kind="momentum", a=1.0)


class TestClipThreshold:
    def test_eq5_p2(self):
        spec = ClipSpec(kind="paper-eq5", G_or_C=1.0, p=2.0)
        assert clip_threshold(spec, 1) == pytest.approx(2.0 * math.sqrt(math.log(2.0)), abs=1e-12)

    def test_eq5_p15(self):
        # exponent (2-p)/(6p-4) = 0.5/5 = 0.1
        spec = ClipSpec(kind="paper-eq5", G_or_C=1.0, p=1.5)
        assert clip_threshold(spec, 1) == pytest.approx(2.0 * 2.0**0.1, abs=1e-12)

    def test_general_C_log_value(self):
        spec = ClipSpec(kind="general-C", G_or_C=4.0, p=2.0)
        assert clip_threshold(spec, math.e**2 - 1.0) == pytest.approx(4.0 * math.sqrt(2.0), abs=1e-12)

    def test_constant(self):
        spec = ClipSpec(kind="constant", G_or_C=2.0)
        assert clip_threshold(spec, 5) == 2.0

    def test_onset_matches_definition(self):
        # (2G/C)^((6p-4)/(2-p)) for p < 2, 2^(4G^2/C^2) - 1 at p = 2
        spec = ClipSpec(kind="general-C", G_or_C=1.0, p=1.5)
        assert clip_bias_onset(spec, 1.0) == pytest.approx(2.0**10.0)
        spec2 = ClipSpec(kind="general-C", G_or_C=2.0, p=2.0)
        assert clip_bias_onset(spec2, 1.0) == pytest.approx(2.0 - 1.0)
        eq5 = ClipSpec(kind="paper-eq5", G_or_C=1.0, p=1.5)
        assert clip_bias_onset(eq5, 1.0) == pytest.approx(1.0)


class TestClipVector:
    def test_below_threshold_unchanged(self):
        np.testing.assert_array_equal(clip_vector([3.0, 4.0], 10.0), [3.0, 4.0])

    def test_boundary_unchanged(self):
        np.testing.assert_array_equal(clip_vector([3.0, 4.0], 5.0), [3.0, 4.0])

    def test_scaled_above(self):
        np.testing.assert_allclose(clip_vector([3.0, 4.0], 1.0), [0.6, 0.8])

    def test_zero_vector(self):
        np.testing.assert_array_equal(clip_vector([0.0, 0.0], 1.0), [0.0, 0.0])

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
        st.floats(1e-6, 1e6),
    )
    @settings(max_examples=200, deadline=None)
    def test_norm_capped_direction_preserved(self, coords, gamma):
        g = np.asarray(coords)
        out = clip_vector(g, gamma)
        assert np.linalg.norm(out) <= max(gamma, np.linalg.norm(g)) * (1 + 1e-12)
        assert np.linalg.norm(out) <= gamma * (1 + 1e-12) or np.array_equal(out, g)
        # direction preserved: out is a non-negative multiple of g
        assert np.dot(out, g) >= 0.0
        cross = np.linalg.norm(np.cross(out, g))
        assert cross <= 1e-6 * max(1.0, np.linalg.norm(g) ** 2)


class TestRunConfigValidation:
    def test_step_coefficient_above_inverse_L_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            cost = huber_cost(1.0, 2)
            RunConfig(
                method="vanilla",
                cost=cost,
                oracle=AdditiveOracle(cost=cost, noise=SphereNoise(radius=0.1, dim=2)),
                init_x1=np.zeros(2),
                horizon_T=4,
                step_schedule=ScheduleSpec(kind="sgd-sqrt", a=1.01 / cost.smoothness_L),
                clip_schedule=None,
                seed=0,
                epsilon_grid=np.array([0.1]),
            )

    def test_vanilla_with_clip_rejected(self):
        with pytest.raises(ValueError):
            solvable_instance(method="vanilla", clip=ClipSpec(kind="constant", G_or_C=2.0))

    def test_clipped_without_clip_rejected(self):
        with pytest.raises(ValueError):
            solvable_instance(method="clipped", clip=None)

    def test_unsorted_epsilon_grid_rejected(self):
        cost = pseudo_huber_cost(1.0, 2)
        with pytest.raises(ValueError):
            RunConfig(
                method="vanilla",
                cost=cost,
                oracle=AdditiveOracle(cost=cost, noise=SphereNoise(radius=0.1, dim=2)),
                init_x1=np.zeros(2),
                horizon_T=4,
                step_schedule=ScheduleSpec(kind="sgd-sqrt", a=1.0),
                clip_schedule=None,
                seed=0,
                epsilon_grid=np.array([0.2, 0.1]),
            )


class TestTrajectories:
    def test_noiseless_contraction_strictly_decreases(self):
        # inside the ball the noiseless recursion is x <- (1 - alpha_t) x
        cost = huber_cost(1.0, 2)
        config = RunConfig(
            method="vanilla",
            cost=cost,
            oracle=AdditiveOracle(cost=cost, noise=SphereNoise(radius=0.0, dim=2)),
            init_x1=np.array([0.6, 0.0]),
            horizon_T=20,
            step_schedule=ScheduleSpec(kind="sgd-sqrt", a=0.5),
            clip_schedule=None,
            seed=0,
            epsilon_grid=np.array([0.01]),
        )
        rec = run_trajectory(config, 0)
        assert np.all(np.diff(rec.grad_norm_sq) < 0)
        expected = 0.36
        for t in range(1, 20):
            assert rec.grad_norm_sq[t - 1] == pytest.approx(expected, rel=1e-12)
            expected *= (1.0 - 0.5 / math.sqrt(t + 1.0)) ** 2

    def test_determinism_bit_identical(self):
        config = solvable_instance(T=16)
        a = run_trajectory(config, 5)
        b = run_trajectory(config, 5)
        np.testing.assert_array_equal(a.grad_norm_sq, b.grad_norm_sq)
        assert a.hitting_time == b.hitting_time
        assert a.clip_event_count == b.clip_event_count

    def test_distinct_runs_differ(self):
        config = solvable_instance(T=16)
        a = run_trajectory(config, 0)
        b = run_trajectory(config, 1)
        assert not np.array_equal(a.grad_norm_sq, b.grad_norm_sq)

    def test_run_matches_ensemble_row(self):
        config = solvable_instance(T=10)
        arrays = simulate_runs(config, [3], record_full=True)
        rec = run_trajectory(config, 3)
        np.testing.assert_array_equal(arrays.grad_norm_sq[0], rec.grad_norm_sq)

    def test_stuck_event_probability(self):
        # staying at x1 requires the minus noise atom at every update
        config = solvable_instance(T=6, seed=99)
        arrays = simulate_runs(config, range(20000), record_full=True)
        stuck = np.all(np.isclose(arrays.grad_norm_sq, 0.36), axis=1)
        assert np.mean(stuck) == pytest.approx(2.0**-5, abs=0.004)

    def test_no_clip_equivalence_and_boundedness(self):
        vanilla = solvable_instance(T=40)
        clipped = solvable_instance(method="clipped", clip=ClipSpec(kind="constant", G_or_C=2.0), T=40)
        a = simulate_runs(vanilla, range(3000), record_full=True, check_invariants=True)
        b = simulate_runs(clipped, range(3000), record_full=True, check_invariants=True)
        np.testing.assert_array_equal(a.grad_norm_sq, b.grad_norm_sq)
        assert np.all(b.clip_events == 0)
        # ||x_t|| <= G throughout (grad = x inside the ball, so gns = ||x||^2)
        assert np.all(a.grad_norm_sq <= 1.0 + 1e-12)

    def test_running_stats_and_hitting_consistency(self):
        config = solvable_instance(T=24)
        arrays = simulate_runs(config, range(500), record_full=True, check_invariants=True)
        assert np.all(np.diff(arrays.running_min, axis=1) <= 0)
        assert np.all(arrays.running_avg >= arrays.running_min - 1e-12)

    def test_divergence_guard(self):
        cost = pseudo_huber_cost(1.0, 2)
        config = RunConfig(
            method="vanilla",
            cost=cost,
            oracle=AdditiveOracle(cost=cost, noise=SphereNoise(radius=0.5, dim=2)),
            init_x1=np.array([1.0, 1.0]),
            horizon_T=5,
            step_schedule=ScheduleSpec(kind="constant", c=1e12),
            clip_schedule=None,
            seed=0,
            epsilon_grid=np.array([0.5]),
        )
        rec = run_trajectory(config, 0)
        assert rec.diverged
        assert rec.hitting_time[0.5] == math.inf

    def test_lean_and_full_agree(self):
        config = solvable_instance(T=12)
        lean = simulate_runs(config, range(200), record_full=False)
        full = simulate_runs(config, range(200), record_full=True)
        np.testing.assert_array_equal(lean.hit, full.hit)
        np.testing.assert_array_equal(lean.clip_events, full.clip_events)
        np.testing.assert_array_equal(lean.final_min, full.running_min[:, -1])
