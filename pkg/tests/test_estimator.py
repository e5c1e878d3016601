"""Estimator-protocol surface of the imitation learner."""

import numpy as np
import pytest
from sklearn.base import clone

import kernelgail as kg
from kernelgail import GailImitator
from kernelgail.errors import ConfigError


@pytest.fixture(scope="module")
def fitted(mdp5, fs16, demos):
    est = GailImitator(mdp=mdp5, features=fs16, n_iters=150, q_theta=64, q_omega=64,
                       seed=3)
    return est.fit(demos)


class TestProtocol:
    def test_get_set_params_round_trip(self, mdp5, fs16):
        est = GailImitator(mdp=mdp5, features=fs16, kappa=2.0, n_iters=10)
        params = est.get_params()
        assert params["kappa"] == 2.0
        est.set_params(mu=0.7)
        assert est.mu == 0.7

    def test_clone_preserves_params(self, mdp5, fs16):
        est = GailImitator(mdp=mdp5, features=fs16, algo="greedy", seed=9)
        twin = clone(est)
        assert twin.algo == "greedy"
        assert twin.seed == 9
        np.testing.assert_array_equal(twin.mdp.transition, mdp5.transition)
        assert not hasattr(twin, "policy_")

    def test_fit_requires_environment(self, demos):
        with pytest.raises(ConfigError):
            GailImitator().fit(demos)

    def test_unfitted_predict_raises(self, mdp5, fs16):
        with pytest.raises(ConfigError):
            GailImitator(mdp=mdp5, features=fs16).predict([0, 1])


class TestFitPredict:
    def test_fit_sets_learned_attributes(self, fitted):
        assert fitted.omega_.shape == (3, 5)
        assert fitted.theta_.shape == (16,)
        assert fitted.n_iter_ == 150
        assert len(fitted.history_) == 150

    def test_predict_proba_rows_are_distributions(self, fitted):
        probs = fitted.predict_proba(np.arange(5))
        assert probs.shape == (5, 3)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        assert probs.min() > 0

    def test_predict_is_argmax(self, fitted):
        states = np.array([0, 2, 4])
        np.testing.assert_array_equal(
            fitted.predict(states), np.argmax(fitted.predict_proba(states), axis=1))

    def test_fit_accepts_raw_pairs(self, mdp5, fs16, demos):
        est = GailImitator(mdp=mdp5, features=fs16, n_iters=5, seed=0)
        est.fit(demos.pairs())
        assert hasattr(est, "policy_")

    def test_invalid_pairs_rejected(self, mdp5, fs16):
        est = GailImitator(mdp=mdp5, features=fs16, n_iters=5)
        with pytest.raises(ValueError):
            est.fit(np.array([[0, 99]]))

    def test_score_is_negative_distance(self, fitted, demos):
        score = fitted.score(demos)
        assert score <= 0
        chain = kg.induced_chain(fitted.mdp, fitted.policy_)
        emp = kg.empirical_feature_expectation(demos, fitted.features)
        g = kg.feature_expectation(fitted.features, chain.stationary)
        assert abs(score + fitted.kappa * np.linalg.norm(emp - g)) < 1e-12

    def test_average_true_reward_improves_on_uniform(self, fitted, mdp5, fs16):
        uniform_chain = kg.induced_chain(mdp5, kg.uniform_policy(fs16))
        uniform_reward = float(uniform_chain.stationary @ mdp5.eval_reward.reshape(-1))
        assert fitted.average_true_reward() > uniform_reward

    def test_deterministic_given_seed(self, mdp5, fs16, demos):
        a = GailImitator(mdp=mdp5, features=fs16, n_iters=20, seed=5).fit(demos)
        b = GailImitator(mdp=mdp5, features=fs16, n_iters=20, seed=5).fit(demos)
        np.testing.assert_array_equal(a.omega_, b.omega_)
        np.testing.assert_array_equal(a.theta_, b.theta_)


class TestSampling:
    def test_sample_actions_deterministic_and_valid(self, fitted):
        states = np.array([0, 1, 2, 3, 4] * 4)
        a1 = fitted.sample_actions(states, seed=3)
        a2 = fitted.sample_actions(states, seed=3)
        np.testing.assert_array_equal(a1, a2)
        assert a1.min() >= 0 and a1.max() < 3
