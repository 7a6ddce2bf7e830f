import math

import numpy as np
import pytest

from duelsim import envgen
from duelsim.envgen import EnvSpec, EnvSpecError, generate, lb_epsilon
from duelsim.prefmat import (
    PreferenceMatrix,
    condorcet_winner,
    continuous_variation,
    switching_variation,
    validate_entries,
)


class TestEnvSpec:
    def test_unknown_field_rejected(self):
        with pytest.raises(EnvSpecError):
            EnvSpec.from_json({"kind": "gaussian_walk", "k": 3, "t_horizon": 5, "seed": 0, "bogus": 1})

    def test_unknown_kind_rejected(self):
        with pytest.raises(EnvSpecError):
            EnvSpec(kind="brownian", k=3, t_horizon=5, seed=0)

    def test_json_round_trip(self):
        spec = EnvSpec(kind="switching_walk", k=4, t_horizon=100, seed=7, s_switches=3)
        assert EnvSpec.from_json(spec.to_json()) == spec


class TestGaussianWalk:
    def test_deterministic_replay(self):
        spec = EnvSpec(kind="gaussian_walk", k=10, t_horizon=200, seed=42)
        a = generate(spec).materialize()
        b = generate(spec).materialize()
        for x, y in zip(a.iter_arrays(), b.iter_arrays()):
            assert np.array_equal(x, y)

    def test_all_matrices_valid(self):
        spec = EnvSpec(kind="gaussian_walk", k=5, t_horizon=100, seed=3)
        for m in generate(spec).iter_arrays():
            validate_entries(m)

    def test_step_magnitude_matches_folded_normal_max(self):
        # Mean per-step max-entry |change| for K=10 (45 pairs) at sigma=0.002,
        # against a Monte-Carlo oracle of max of 45 folded normals. The walk
        # clips at [0,1], which can only shrink steps; with interior starts
        # over 1000 steps clipping is rare and absorbed by the tolerance.
        sigma = 0.002
        k, t = 10, 1001
        spec = EnvSpec(kind="gaussian_walk", k=k, t_horizon=t, seed=2024, sigma=sigma)
        steps = []
        prev = None
        for m in generate(spec).iter_arrays():
            if prev is not None:
                steps.append(np.max(np.abs(m - prev)))
            prev = m.copy()
        steps = np.asarray(steps)
        n_pairs = k * (k - 1) // 2
        oracle_rng = np.random.default_rng(99)
        n_oracle = 400_000
        oracle = np.max(np.abs(oracle_rng.normal(0, sigma, (n_oracle, n_pairs))), axis=1)
        se = math.hypot(steps.std(ddof=1) / math.sqrt(len(steps)),
                        oracle.std(ddof=1) / math.sqrt(n_oracle))
        assert abs(steps.mean() - oracle.mean()) < 4 * se


class TestSwitchingWalk:
    def test_needs_two_segments(self):
        with pytest.raises(EnvSpecError):
            generate(EnvSpec(kind="switching_walk", k=3, t_horizon=10, seed=0, s_switches=1))

    def test_s2_single_jump_out_of_horizon(self):
        # S=2 -> period T; the only jump would form matrix T (out of horizon)
        spec = EnvSpec(kind="switching_walk", k=3, t_horizon=100, seed=5, s_switches=2)
        assert switching_variation(generate(spec)) == 0

    def test_realized_changes_at_most_s_minus_1(self):
        for seed in range(5):
            spec = EnvSpec(kind="switching_walk", k=4, t_horizon=120, seed=seed, s_switches=5)
            assert switching_variation(generate(spec)) <= 4

    def test_constant_between_jumps(self):
        spec = EnvSpec(kind="switching_walk", k=3, t_horizon=40, seed=1, s_switches=5)
        period = 40 // 4
        mats = [m.copy() for m in generate(spec).iter_arrays()]
        for t in range(1, 40):
            if t % period != 0:
                assert np.array_equal(mats[t], mats[t - 1])

    def test_boundaries_recorded(self):
        spec = EnvSpec(kind="switching_walk", k=3, t_horizon=40, seed=1, s_switches=5)
        assert generate(spec).meta.boundaries == [0, 10, 20, 30, 40]


class TestContinuousBudget:
    def test_zero_budget_constant(self):
        spec = EnvSpec(kind="continuous_budget", k=3, t_horizon=50, seed=8, v_budget=0.0)
        seq = generate(spec)
        assert continuous_variation(seq) == 0.0

    def test_realized_at_most_declared(self):
        for seed in range(5):
            spec = EnvSpec(kind="continuous_budget", k=4, t_horizon=200, seed=seed, v_budget=2.0)
            assert continuous_variation(generate(spec)) <= 2.0 + 1e-9

    def test_unclipped_budget_realized_exactly(self):
        # A tiny budget never hits the clip boundary for interior starts, so
        # the realized variation equals the declared budget.
        spec = EnvSpec(kind="continuous_budget", k=3, t_horizon=100, seed=12, v_budget=1e-4)
        assert continuous_variation(generate(spec)) == pytest.approx(1e-4, rel=1e-9)

    def test_missing_budget_rejected(self):
        with pytest.raises(EnvSpecError):
            generate(EnvSpec(kind="continuous_budget", k=3, t_horizon=10, seed=0))


class TestLowerBoundInstance:
    def test_planted_matrix_values_k3(self):
        spec = EnvSpec(kind="lower_bound", k=3, t_horizon=4, seed=0, s_switches=1, epsilon=0.1)
        seq = generate(spec)
        w = seq.meta.winners[0]
        m = next(seq.iter_arrays())
        assert condorcet_winner(PreferenceMatrix(m)) == w
        # winner row and arm-0 row (vs non-winner) sit at 0.6
        assert np.all(m[w, [j for j in range(3) if j != w]] == pytest.approx(0.6))
        other = next(j for j in range(1, 3) if j != w)
        assert m[0, other] == pytest.approx(0.6)

    def test_case_enumeration_k4(self):
        # winner 2 (0-based), eps 0.2: winner row 0.7, arm-0 row 0.7 vs
        # non-winners, remaining pair ties at 0.5
        spec = EnvSpec(kind="lower_bound", k=4, t_horizon=2, seed=3, s_switches=1, epsilon=0.2)
        seq = generate(spec)
        w = seq.meta.winners[0]
        m = next(seq.iter_arrays())
        others = [j for j in range(4) if j not in (0, w)]
        assert np.all(m[w, [j for j in range(4) if j != w]] == pytest.approx(0.7))
        assert np.all(m[0, others] == pytest.approx(0.7))
        assert m[others[0], others[1]] == pytest.approx(0.5)

    def test_winners_never_arm_zero(self):
        for seed in range(20):
            spec = EnvSpec(kind="lower_bound", k=5, t_horizon=50, seed=seed, s_switches=5, epsilon=0.1)
            assert all(w != 0 for w in generate(spec).meta.winners)

    def test_entry_alphabet_and_segment_winner(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            k = int(rng.integers(3, 11))
            s = int(rng.integers(1, 6))
            eps = float(rng.uniform(0.01, 0.24))
            spec = EnvSpec(kind="lower_bound", k=k, t_horizon=40, seed=int(rng.integers(1 << 30)),
                           s_switches=s, epsilon=eps)
            seq = generate(spec)
            meta = seq.meta
            mats = [m for m in seq.iter_arrays()]
            for si in range(s):
                for t in range(meta.boundaries[si], meta.boundaries[si + 1]):
                    m = mats[t]
                    allowed = {0.5 - eps, 0.5, 0.5 + eps}
                    assert all(any(abs(v - a) < 1e-12 for a in allowed) for v in m.ravel())
                    assert condorcet_winner(PreferenceMatrix(m)) == meta.winners[si]

    def test_epsilon_zero_not_allowed_all_half_via_tiny(self):
        with pytest.raises(EnvSpecError):
            EnvSpec(kind="lower_bound", k=3, t_horizon=4, seed=0, epsilon=0.0)

    def test_segment_lengths_near_equal(self):
        spec = EnvSpec(kind="lower_bound", k=3, t_horizon=10, seed=0, s_switches=3, epsilon=0.1)
        b = generate(spec).meta.boundaries
        lengths = [b[i + 1] - b[i] for i in range(3)]
        assert lengths == [4, 3, 3]


class TestLbEpsilon:
    def test_switching_value(self):
        eps, delta = lb_epsilon("switching", 3, 10_000, s_switches=2)
        expected = 0.5 * math.sqrt(2 * 2 / (10_000 * math.log(4 / 3)))
        assert eps == pytest.approx(expected)
        assert eps == pytest.approx(0.018645, abs=1e-6)
        assert delta is None

    def test_continuous_value(self):
        eps, delta = lb_epsilon("continuous", 3, 10_000, v_budget=10.0)
        assert delta == 16
        assert eps == pytest.approx(0.008)

    def test_clamp(self):
        eps, _ = lb_epsilon("switching", 3, 10, s_switches=10)
        assert eps == pytest.approx(0.25 - 1e-9)

    def test_bad_arguments(self):
        with pytest.raises(EnvSpecError):
            lb_epsilon("switching", 3, 100)
        with pytest.raises(EnvSpecError):
            lb_epsilon("continuous", 3, 100)
        with pytest.raises(EnvSpecError):
            lb_epsilon("other", 3, 100, s_switches=1)
