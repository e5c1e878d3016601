"""Shared fixtures: the canonical 5-state/3-action environment and its
derived artifacts, loaded once per session from the files in fixtures/."""

import os

import numpy as np
import pytest

import kernelgail as kg

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")
MDP_PATH = os.path.join(FIXTURE_DIR, "mdp5.txt")
FEATURES_PATH = os.path.join(FIXTURE_DIR, "features5.txt")

KAPPA = 1.0
MU = 0.3


@pytest.fixture(scope="session")
def mdp5():
    return kg.load_mdp(MDP_PATH)


@pytest.fixture(scope="session")
def fs16(mdp5):
    return kg.load_features(FEATURES_PATH)


@pytest.fixture(scope="session")
def fs4(mdp5):
    # Low-dimensional reward space: sphere-sampling oracles need q small
    # enough that 1e5 random directions cover the optimum to 1%.
    return kg.build_features(mdp5, d_S=5, d_A=2, q=4, bandwidth=1.0, seed=19)


@pytest.fixture(scope="session")
def expert(mdp5, fs16):
    actions, _ = kg.average_reward_policy_iteration(mdp5)
    return kg.fit_policy_to_actions(fs16, actions, margin=6.0)


@pytest.fixture(scope="session")
def expert_chain(mdp5, expert):
    return kg.induced_chain(mdp5, expert)


@pytest.fixture(scope="session")
def expert_reward(mdp5, expert_chain):
    return float(expert_chain.stationary @ mdp5.eval_reward.reshape(-1))


@pytest.fixture(scope="session")
def demos(mdp5, expert):
    return kg.rollout(mdp5, expert, n=500, T=200, seed=11, burn_in=100)


@pytest.fixture(scope="session")
def demo_fe(demos, fs16):
    return kg.empirical_feature_expectation(demos, fs16)


@pytest.fixture(scope="session")
def expert_fe(fs16, expert_chain):
    return kg.feature_expectation(fs16, expert_chain.stationary)


@pytest.fixture(scope="session")
def regularity(mdp5, fs16):
    return kg.estimate_regularity(mdp5, fs16, n_probe=100, seed=3, kappa=KAPPA)


@pytest.fixture(scope="session")
def smoothness(regularity, fs16):
    return kg.lipschitz_constants(regularity, fs16, KAPPA, fs16.q)


def two_state_mdp(p, q_prob, n_actions=1, eval_reward=None):
    """Two-state MDP with action-independent transitions [[1-p, p], [q, 1-q]]."""
    P = np.zeros((2, n_actions, 2))
    P[0, :, 0] = 1 - p
    P[0, :, 1] = p
    P[1, :, 0] = q_prob
    P[1, :, 1] = 1 - q_prob
    return kg.TabularMDP(2, n_actions, P, np.array([0.5, 0.5]), eval_reward=eval_reward)


def random_mdp(seed, n_states=5, n_actions=3, blend=0.0):
    rng = np.random.default_rng(seed)
    raw = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    P = (1 - blend) * raw + blend / n_states
    p0 = rng.dirichlet(np.ones(n_states))
    return kg.TabularMDP(n_states, n_actions, P, p0,
                         eval_reward=rng.random((n_states, n_actions)))
