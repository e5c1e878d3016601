"""Scikit-learn style front end for the imitation learner.

`GailImitator` wraps the training loop in the estimator protocol: construct
with hyperparameters, `fit` on demonstration state-action pairs, then
`predict` / `predict_proba` actions for states. `get_params` / `set_params`
come from BaseEstimator, so the learner composes with pipelines and
cross-validation tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ConfigError
from .features import FeatureSystem, feature_expectation
from .mdp import TabularMDP, induced_chain
from .optimize import AltSgdConfig, run_training
from .policy import make_policy
from .validation import check_state_action_pairs, check_states


class GailImitator(BaseEstimator):
    """Learn a softmax policy whose stationary reward features match
    demonstrations, against the worst reward in a kernel ball.

    Parameters
    ----------
    mdp : TabularMDP
        Environment dynamics (transitions are assumed known).
    features : FeatureSystem
        State/action features and the reward feature map.
    algo : {"alt", "greedy"}
        Alternating ascent/descent, or descent against the estimated inner
        maximizer.
    kappa, mu, entropy_weight : float
        Reward-ball radius, strong-concavity weight, and policy entropy
        regularization.
    eta_theta, eta_omega : float
        Step sizes (practical defaults; see `strict_theory` for the
        conservative theory schedule).
    q_theta, q_omega : int
        Mini-batch sizes for the two gradient estimators.
    n_iters : int
        Number of optimizer iterations.
    reward_updates : int
        Inner reward ascent steps per iteration (alternating mode).
    exact_gradients : bool
        Replace both estimators with their exact oracles (full batch).
    seed : int
        Root seed for all sampling.
    """

    def __init__(
        self,
        mdp: TabularMDP | None = None,
        features: FeatureSystem | None = None,
        algo: str = "alt",
        kappa: float = 1.0,
        mu: float = 0.3,
        entropy_weight: float = 0.0,
        eta_theta: float = 2.0,
        eta_omega: float = 5.0,
        q_theta: int = 256,
        q_omega: int = 256,
        n_iters: int = 2000,
        reward_updates: int = 1,
        exact_gradients: bool = False,
        seed: int = 0,
    ):
        self.mdp = mdp
        self.features = features
        self.algo = algo
        self.kappa = kappa
        self.mu = mu
        self.entropy_weight = entropy_weight
        self.eta_theta = eta_theta
        self.eta_omega = eta_omega
        self.q_theta = q_theta
        self.q_omega = q_omega
        self.n_iters = n_iters
        self.reward_updates = reward_updates
        self.exact_gradients = exact_gradients
        self.seed = seed

    def _config(self) -> AltSgdConfig:
        return AltSgdConfig(
            eta_theta=self.eta_theta, eta_omega=self.eta_omega,
            q_theta=self.q_theta, q_omega=self.q_omega,
            kappa=self.kappa, mu=self.mu, lam=self.entropy_weight,
            n_iters=self.n_iters, mode="sample",
            reward_updates=self.reward_updates, exact_gradients=self.exact_gradients,
        )

    def fit(self, X, y=None):
        """Fit on demonstrations.

        X is an (N, 2) integer array of (state, action) pairs, or any object
        with a `pairs()` method returning one (e.g. TrajectoryBatch).
        """
        if self.mdp is None or self.features is None:
            raise ConfigError("GailImitator needs both `mdp` and `features`")
        if hasattr(X, "pairs"):
            X = X.pairs()
        X = check_state_action_pairs(X, self.mdp.n_states, self.mdp.n_actions)
        fs = self.features
        table = fs.feature_table()
        demo_fe = table[X[:, 0], X[:, 1]].mean(axis=0)

        result = run_training(self.mdp, fs, self._config(), demo_fe,
                              algo=self.algo, seed=self.seed)
        self.demo_feature_expectation_ = demo_fe
        self.omega_ = result.state.omega
        self.theta_ = result.state.theta
        self.policy_ = make_policy(fs, self.omega_)
        self.history_ = result.history
        self.result_ = result
        self.n_iter_ = result.state.iteration
        return self

    def _check_fitted(self):
        if not hasattr(self, "policy_"):
            raise ConfigError("this GailImitator instance is not fitted yet")

    def predict_proba(self, states) -> np.ndarray:
        """Action probabilities of the learned policy, one row per state."""
        self._check_fitted()
        states = check_states(states, self.mdp.n_states)
        return self.policy_.prob_table()[states]

    def predict(self, states) -> np.ndarray:
        """Most probable action per state."""
        return np.argmax(self.predict_proba(states), axis=1)

    def sample_actions(self, states, seed: int = 0) -> np.ndarray:
        """Draw actions from the learned policy."""
        probs = self.predict_proba(states)
        rng = np.random.default_rng(seed)
        u = rng.random(len(probs))
        return (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)

    def score(self, X, y=None) -> float:
        """Negative worst-case reward gap between demonstrations X and the
        learned policy (higher is better, 0 is perfect feature matching)."""
        self._check_fitted()
        if hasattr(X, "pairs"):
            X = X.pairs()
        X = check_state_action_pairs(X, self.mdp.n_states, self.mdp.n_actions)
        table = self.features.feature_table()
        emp = table[X[:, 0], X[:, 1]].mean(axis=0)
        chain = induced_chain(self.mdp, self.policy_)
        g = feature_expectation(self.features, chain.stationary)
        return -self.kappa * float(np.linalg.norm(emp - g))

    def average_true_reward(self) -> float:
        """Stationary average of the MDP's evaluation reward, if present."""
        self._check_fitted()
        if self.mdp.eval_reward is None:
            raise ConfigError("the MDP carries no evaluation reward")
        chain = induced_chain(self.mdp, self.policy_)
        return float(chain.stationary @ self.mdp.eval_reward.reshape(-1))
