"""Rollouts, demonstration files, and stochastic gradient estimators."""

import numpy as np
import pytest

import kernelgail as kg
from kernelgail.sampling import (
    greedy_gradient_second_moment,
    noise_moment_omega,
    noise_moment_theta,
    substream,
)

from conftest import KAPPA, MU


def ball_theta(q, seed, scale=0.8):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(q)
    return t * scale / np.linalg.norm(t)


class TestRollout:
    def test_single_state_single_action(self):
        mdp = kg.TabularMDP(1, 1, np.ones((1, 1, 1)), np.ones(1))
        fs = kg.build_features(mdp, d_S=1, d_A=1, q=2, bandwidth=1.0, seed=0)
        batch = kg.rollout(mdp, kg.uniform_policy(fs), n=3, T=10, seed=0)
        assert np.all(batch.states == 0)
        assert np.all(batch.actions == 0)

    def test_frequencies_match_stationary(self, mdp5, fs16, expert, expert_chain):
        batch = kg.rollout(mdp5, expert, n=10, T=100_000, seed=21, burn_in=200)
        idx = batch.states.reshape(-1) * 3 + batch.actions.reshape(-1)
        freq = np.bincount(idx, minlength=15) / idx.size
        assert kg.tv_distance(freq, expert_chain.stationary) <= 0.01

    def test_deterministic_given_seed(self, mdp5, fs16, expert):
        a = kg.rollout(mdp5, expert, n=4, T=50, seed=9, burn_in=10)
        b = kg.rollout(mdp5, expert, n=4, T=50, seed=9, burn_in=10)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.actions, b.actions)

    def test_trajectories_have_independent_streams(self, mdp5, fs16, expert):
        # Reordering or subsetting trajectories never changes their content.
        full = kg.rollout(mdp5, expert, n=5, T=50, seed=9)
        single = kg.rollout(mdp5, expert, n=1, T=50, seed=9)
        np.testing.assert_array_equal(full.states[0], single.states[0])


class TestEmpiricalFeatureExpectation:
    def test_repeated_pair(self, fs16):
        batch = kg.TrajectoryBatch(states=np.full((2, 3), 4), actions=np.full((2, 3), 1))
        np.testing.assert_allclose(kg.empirical_feature_expectation(batch, fs16),
                                   kg.reward_features(fs16, 4, 1), atol=1e-15)

    def test_converges_to_exact(self, mdp5, fs16, expert, expert_fe):
        batch = kg.rollout(mdp5, expert, n=10, T=100_000, seed=23, burn_in=200)
        emp = kg.empirical_feature_expectation(batch, fs16)
        assert np.linalg.norm(emp - expert_fe) <= 0.02

    def test_concatenation_linearity(self, mdp5, fs16, expert):
        a = kg.rollout(mdp5, expert, n=2, T=40, seed=1)
        b = kg.rollout(mdp5, expert, n=2, T=40, seed=2)
        both = kg.TrajectoryBatch(
            states=np.concatenate([a.states, b.states]),
            actions=np.concatenate([a.actions, b.actions]))
        fa = kg.empirical_feature_expectation(a, fs16)
        fb = kg.empirical_feature_expectation(b, fs16)
        np.testing.assert_allclose(kg.empirical_feature_expectation(both, fs16),
                                   (fa + fb) / 2, atol=1e-12)


class TestThetaGradient:
    def test_point_mass_chain_is_exact(self):
        mdp = kg.TabularMDP(1, 1, np.ones((1, 1, 1)), np.ones(1))
        fs = kg.build_features(mdp, d_S=1, d_A=1, q=3, bandwidth=1.0, seed=0)
        policy = kg.uniform_policy(fs)
        reward = kg.KernelReward(theta=ball_theta(3, 1), kappa=KAPPA)
        demo = np.zeros(3)
        exact = kg.exact_grad_theta(mdp, fs, policy, reward, MU, demo)
        for q_theta in (1, 7):
            est = kg.stoch_grad_theta(mdp, fs, policy, reward, MU, demo, q_theta, seed=5)
            np.testing.assert_allclose(est.value, exact, atol=1e-14)

    def test_large_batch_close_to_exact(self, mdp5, fs16, expert, demo_fe):
        reward = kg.KernelReward(theta=ball_theta(16, 2), kappa=KAPPA)
        chain = kg.induced_chain(mdp5, expert)
        exact = kg.exact_grad_theta(mdp5, fs16, expert, reward, MU, demo_fe)
        m2 = noise_moment_theta(fs16, chain)
        est = kg.stoch_grad_theta(mdp5, fs16, expert, reward, MU, demo_fe, 1_000_000,
                                  seed=3, chain=chain)
        # 3 sigma on the vector norm via the exact single-sample moment.
        assert np.linalg.norm(est.value - exact) <= 3 * np.sqrt(m2 / 1e6)

    def test_unbiased_over_many_estimators(self, mdp5, fs16, expert, demo_fe):
        reward = kg.KernelReward(theta=ball_theta(16, 4), kappa=KAPPA)
        chain = kg.induced_chain(mdp5, expert)
        exact = kg.exact_grad_theta(mdp5, fs16, expert, reward, MU, demo_fe)
        draws = np.stack([
            kg.stoch_grad_theta(mdp5, fs16, expert, reward, MU, demo_fe, 1,
                                seed=6, index=i, chain=chain).value
            for i in range(10_000)
        ])
        se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - exact) <= 3 * se + 1e-12)


class TestOmegaGradient:
    def test_zero_reward_zero_estimate(self, mdp5, fs16, expert):
        reward = kg.KernelReward(theta=np.zeros(16), kappa=KAPPA)
        est = kg.stoch_grad_omega(mdp5, fs16, expert, reward, 0.0, 4, seed=0)
        assert np.abs(est.value).max() == 0.0

    def test_unbiased_over_many_estimators(self, mdp5, fs16, expert, demo_fe):
        reward = kg.KernelReward(theta=ball_theta(16, 5), kappa=KAPPA)
        oracle = kg.build_policy_oracle(mdp5, fs16, expert)
        exact = oracle.grad_omega(reward.theta, 0.0)
        draws = np.stack([
            kg.stoch_grad_omega(mdp5, fs16, expert, reward, 0.0, 1,
                                seed=7, index=i, oracle=oracle).value.reshape(-1)
            for i in range(10_000)
        ])
        se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - exact.reshape(-1)) <= 3 * se + 1e-12)

    def test_variance_scales_inversely_with_batch(self, mdp5, fs16, expert):
        reward = kg.KernelReward(theta=ball_theta(16, 8), kappa=KAPPA)
        oracle = kg.build_policy_oracle(mdp5, fs16, expert)

        def traces(q, n, seed):
            draws = np.stack([
                kg.stoch_grad_omega(mdp5, fs16, expert, reward, 0.0, q,
                                    seed=seed, index=i, oracle=oracle).value.reshape(-1)
                for i in range(n)
            ])
            return float(draws.var(axis=0, ddof=1).sum())

        v1 = traces(1, 10_000, seed=8)
        v100 = traces(100, 10_000, seed=9)
        assert 70.0 <= v1 / v100 <= 140.0

    def test_rollout_bias_variant_roughly_agrees(self, mdp5, fs16, expert):
        reward = kg.KernelReward(theta=ball_theta(16, 10), kappa=KAPPA)
        oracle = kg.build_policy_oracle(mdp5, fs16, expert)
        exact = oracle.grad_omega(reward.theta, 0.0)
        draws = np.stack([
            kg.stoch_grad_omega(mdp5, fs16, expert, reward, 0.0, 8, seed=11, index=i,
                                oracle=oracle, use_rollout_q=True,
                                rollout_horizon=60).value.reshape(-1)
            for i in range(600)
        ])
        # Approximately unbiased: truncation bias decays geometrically.
        assert np.linalg.norm(draws.mean(axis=0) - exact.reshape(-1)) <= 0.05

    def test_trajectory_pair_source_runs(self, mdp5, fs16, expert):
        reward = kg.KernelReward(theta=ball_theta(16, 12), kappa=KAPPA)
        est = kg.stoch_grad_omega(mdp5, fs16, expert, reward, 0.0, 64, seed=12,
                                  pair_source="trajectory")
        assert est.value.shape == (3, 5)


class TestThetaStar:
    def test_zero_mean_at_matched_policy(self, mdp5, fs16, expert, expert_fe):
        chain = kg.induced_chain(mdp5, expert)
        draws = np.stack([
            kg.theta_star_estimator(mdp5, fs16, expert, expert_fe, MU, 1,
                                    seed=13, index=i, chain=chain)
            for i in range(10_000)
        ])
        se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0)) <= 3 * se + 1e-12)

    def test_large_batch_matches_closed_form(self, mdp5, fs16, expert, demo_fe):
        oracle = kg.build_policy_oracle(mdp5, fs16, expert)
        target = (oracle.feat_exp - demo_fe) / MU
        est = kg.theta_star_estimator(mdp5, fs16, expert, demo_fe, MU, 1_000_000,
                                      seed=14, chain=oracle.chain)
        m2 = noise_moment_theta(fs16, oracle.chain)
        assert np.linalg.norm(est - target) <= 3 * np.sqrt(m2 / 1e6) / MU

    def test_norm_bound_over_probes(self, mdp5, fs16, expert_fe):
        # Closed form obeys ||theta*(omega)|| <= 2 sqrt(2) rho_g / mu.
        bound = 2 * np.sqrt(2) * fs16.rho_g / MU
        rng = np.random.default_rng(15)
        for _ in range(25):
            policy = kg.make_policy(fs16, rng.uniform(-5, 5, (3, 5)))
            oracle = kg.build_policy_oracle(mdp5, fs16, policy)
            theta_star = (oracle.feat_exp - expert_fe) / MU
            assert np.linalg.norm(theta_star) <= bound


class TestNoiseMoments:
    def test_exact_theta_moment_matches_empirical(self, mdp5, fs16, expert):
        chain = kg.induced_chain(mdp5, expert)
        m2 = noise_moment_theta(fs16, chain)
        rng = np.random.default_rng(16)
        idx = rng.choice(15, size=200_000, p=chain.stationary)
        g = fs16.feature_table().reshape(15, -1)[idx]
        emp = ((g - g.mean(axis=0)) ** 2).sum(axis=1).mean()
        assert abs(emp - m2) / m2 <= 0.05

    def test_exact_omega_moment_matches_empirical(self, mdp5, fs16, expert):
        theta = ball_theta(16, 17)
        oracle = kg.build_policy_oracle(mdp5, fs16, expert)
        m2 = noise_moment_omega(oracle, theta, 0.0)
        draws = np.stack([
            kg.stoch_grad_omega(mdp5, fs16, expert,
                                kg.KernelReward(theta, KAPPA), 0.0, 1,
                                seed=18, index=i, oracle=oracle).value.reshape(-1)
            for i in range(20_000)
        ])
        emp = ((draws - draws.mean(axis=0)) ** 2).sum(axis=1).mean()
        assert abs(emp - m2) / m2 <= 0.1

    def test_greedy_moment_finite_and_positive(self, mdp5, fs16, expert, demo_fe):
        est = greedy_gradient_second_moment(mdp5, fs16, expert, demo_fe, MU, 0.0,
                                            q_theta=8, q_omega=8, n_draws=500, seed=19)
        assert est.mean > 0 and np.isfinite(est.upper)


class TestDemoFiles:
    def test_round_trip(self, tmp_path, mdp5, fs16, expert):
        batch = kg.rollout(mdp5, expert, n=5, T=20, seed=20)
        path = str(tmp_path / "demos.csv")
        kg.save_demos(path, batch)
        loaded = kg.load_demos(path, mdp5)
        np.testing.assert_array_equal(loaded.states, batch.states)
        np.testing.assert_array_equal(loaded.actions, batch.actions)

    def test_header_validated(self, tmp_path, mdp5):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,0,0\n")
        with pytest.raises(ValueError, match="header"):
            kg.load_demos(str(path), mdp5)

    def test_out_of_range_indices_rejected(self, tmp_path, mdp5):
        path = tmp_path / "bad.csv"
        path.write_text("traj,t,state,action\n0,0,9,0\n")
        with pytest.raises(ValueError):
            kg.load_demos(str(path), mdp5)


class TestStreams:
    def test_substreams_distinct(self):
        a = substream(1, 2, 3).random(4)
        b = substream(1, 2, 4).random(4)
        c = substream(1, 3, 3).random(4)
        assert not np.allclose(a, b)
        assert not np.allclose(a, c)

    def test_substream_reproducible(self):
        np.testing.assert_array_equal(substream(7, 1, 9).random(8),
                                      substream(7, 1, 9).random(8))


class TestDemoMinibatch:
    def test_unbiased_for_full_average(self, mdp5, fs16, demos, demo_fe):
        from kernelgail.sampling import demo_minibatch_fe

        draws = np.stack([demo_minibatch_fe(demos, fs16, 8192, seed=30, index=i)
                          for i in range(400)])
        se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - demo_fe) <= 4 * se + 1e-12)

    def test_respects_minimum_pair_count(self, mdp5, fs16, demos):
        from kernelgail.sampling import demo_minibatch_fe

        # 8192 pairs at T=200 means at least 41 trajectories are used.
        v1 = demo_minibatch_fe(demos, fs16, 8192, seed=1, index=0)
        v2 = demo_minibatch_fe(demos, fs16, 8192, seed=1, index=0)
        np.testing.assert_array_equal(v1, v2)
        with pytest.raises(ValueError):
            demo_minibatch_fe(demos, fs16, 0, seed=1)


class TestUnbiasednessAcrossProbes:
    def test_both_estimators_on_twenty_probe_points(self, mdp5, fs16, demo_fe):
        # Batch means are averages of single-sample estimates, so one
        # 500-sample call per probe tests unbiasedness with the exact
        # single-sample noise moment supplying the standard error.
        rng = np.random.default_rng(40)
        n = 500
        for probe in range(20):
            omega = rng.standard_normal((3, 5)) * rng.uniform(0.3, 2.0)
            theta = ball_theta(fs16.q, 1000 + probe)
            policy = kg.make_policy(fs16, omega)
            oracle = kg.build_policy_oracle(mdp5, fs16, policy)
            reward = kg.KernelReward(theta=theta, kappa=KAPPA)

            est_t = kg.stoch_grad_theta(mdp5, fs16, policy, reward, MU, demo_fe,
                                        n, seed=41, index=probe, chain=oracle.chain)
            exact_t = kg.exact_grad_theta(mdp5, fs16, policy, reward, MU, demo_fe,
                                          oracle=oracle)
            se_t = np.sqrt(noise_moment_theta(fs16, oracle.chain) / n)
            assert np.linalg.norm(est_t.value - exact_t) <= 4 * se_t

            est_w = kg.stoch_grad_omega(mdp5, fs16, policy, reward, 0.0,
                                        n, seed=42, index=probe, oracle=oracle)
            exact_w = oracle.grad_omega(theta, 0.0)
            se_w = np.sqrt(noise_moment_omega(oracle, theta, 0.0) / n)
            assert np.linalg.norm(est_w.value - exact_w) <= 4 * se_w
