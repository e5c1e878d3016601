"""Exact evaluation on tabular MDPs: average reward, bias functions, the
regularized minimax objective, and its gradients.

Everything here is deterministic linear algebra; it is the ground truth the
stochastic estimators are tested against.

The bias (action-value) function solves the average-reward fixed-point
system (I - K) Q = r - J 1 on state-action pairs, which has a one-dimensional
null space (constants); appending the normalization rho . Q = 0 pins the
solution that a centered return series converges to, and the augmented
system is solved by least squares.

The objective F(omega, theta) = theta . (G(pi_omega) - G_demo)
- lam * H(pi_omega) - mu/2 ||theta||^2 is linear in theta apart from the
quadratic penalty, so a single multi-channel bias solve per policy yields F
and both exact gradients for every theta at once:

    grad_omega F = E_rho[score(s,a) * (Q_r(s,a) - lam * Q_H(s,a))]
    grad_theta F = G(pi_omega) - G_demo - mu * theta

where Q_H is the bias of the pseudo-reward -log pi(a|s) (the direct entropy
term vanishes because scores are zero-mean at each state).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystem
from .features import FeatureSystem, KernelReward
from .mdp import PolicyChain, TabularMDP, induced_chain
from .policy import (
    RegularityConstants,
    SoftmaxPolicy,
    entropy as policy_entropy,
    make_policy,
    score_table,
)
from .validation import check_in_ball

POISSON_RESIDUAL_TOL = 1e-10


def poisson_solve_flat(chain: PolicyChain, rewards: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve (I - K) Q = r - J 1 with rho . Q = 0 for one or many reward
    channels.

    `rewards` has shape (n,) or (n, k) over flattened state-action pairs.
    Returns (Q, J) with matching shapes. Raises SingularSystem if the
    augmented system is rank deficient or the residual exceeds 1e-10.
    """
    r = np.asarray(rewards, dtype=float)
    squeeze = r.ndim == 1
    if squeeze:
        r = r[:, None]
    n = chain.n_pairs
    if r.shape[0] != n:
        raise ValueError(f"reward rows {r.shape[0]} do not match chain size {n}")
    J = chain.stationary @ r  # (k,)
    A = np.zeros((n + 1, n))
    A[:n] = np.eye(n) - chain.kernel
    A[n] = chain.stationary
    b = np.zeros((n + 1, r.shape[1]))
    b[:n] = r - J[None, :]
    Q, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < n:
        raise SingularSystem(
            f"augmented bias system has rank {rank} < {n}; the chain is not ergodic"
        )
    residual = float(np.abs(A @ Q - b).max())
    if residual > POISSON_RESIDUAL_TOL:
        raise SingularSystem(f"bias solve residual {residual:g} exceeds {POISSON_RESIDUAL_TOL:g}")
    if squeeze:
        return Q[:, 0], J[0]
    return Q, J


@dataclass(frozen=True, eq=False)
class PoissonResult:
    q_function: np.ndarray  # (n_states, n_actions)
    avg_reward: float


def solve_poisson(chain: PolicyChain, reward: KernelReward, fs: FeatureSystem) -> PoissonResult:
    """Bias function and gain of the kernel reward under the chain."""
    r = reward.table(fs).reshape(-1)
    Q, J = poisson_solve_flat(chain, r)
    return PoissonResult(q_function=Q.reshape(fs.n_states, fs.n_actions), avg_reward=float(J))


def exact_avg_reward(chain: PolicyChain, reward: KernelReward, fs: FeatureSystem) -> float:
    """rho . r; equals theta . G(pi) by linearity."""
    return float(chain.stationary @ reward.table(fs).reshape(-1))


@dataclass(frozen=True, eq=False)
class PolicyOracle:
    """Per-policy exact quantities reused across theta values."""

    chain: PolicyChain
    feat_exp: np.ndarray  # G(pi), shape (q,)
    q_channels: np.ndarray  # bias per feature channel, (S, A, q)
    q_entropy: np.ndarray  # bias of -log pi, (S, A)
    entropy: float
    score: np.ndarray  # (S, A, n_actions, d_S)
    grad_reward_map: np.ndarray  # (n_actions, d_S, q): grad_omega of theta-reward term = map @ theta
    grad_entropy: np.ndarray  # (n_actions, d_S)

    def grad_omega(self, theta: np.ndarray, lam: float) -> np.ndarray:
        return self.grad_reward_map @ theta - lam * self.grad_entropy

    def q_table(self, theta: np.ndarray, lam: float) -> np.ndarray:
        """Q_r - lam * Q_H as one (S, A) table for reward parameter theta."""
        return self.q_channels @ theta - lam * self.q_entropy


def build_policy_oracle(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy: SoftmaxPolicy,
    chain: PolicyChain | None = None,
) -> PolicyOracle:
    if chain is None:
        chain = induced_chain(mdp, policy)
    n = chain.n_pairs
    g_flat = fs.feature_table().reshape(n, fs.q)
    logp = policy.log_prob_table().reshape(n)
    rewards = np.concatenate([g_flat, -logp[:, None]], axis=1)
    Q, J = poisson_solve_flat(chain, rewards)
    q_channels = Q[:, : fs.q].reshape(fs.n_states, fs.n_actions, fs.q)
    q_entropy = Q[:, fs.q].reshape(fs.n_states, fs.n_actions)
    score = score_table(policy, fs)
    weighted_score = chain.stationary.reshape(fs.n_states, fs.n_actions, 1, 1) * score
    grad_map = np.einsum("saij,saq->ijq", weighted_score, q_channels)
    grad_entropy = np.einsum("saij,sa->ij", weighted_score, q_entropy)
    return PolicyOracle(
        chain=chain,
        feat_exp=chain.stationary @ g_flat,
        q_channels=q_channels,
        q_entropy=q_entropy,
        entropy=float(J[fs.q]),
        score=score,
        grad_reward_map=grad_map,
        grad_entropy=grad_entropy,
    )


def exact_objective(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy: SoftmaxPolicy,
    reward: KernelReward,
    lam: float,
    mu: float,
    demo_featexp: np.ndarray,
    oracle: PolicyOracle | None = None,
) -> float:
    """F(omega, theta) for the supplied demonstration feature expectation.

    `demo_featexp` is either the exact expert feature expectation (population
    mode) or an empirical average over demonstrations (sample mode).
    """
    check_in_ball(reward.theta, reward.kappa, "theta")
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy)
    theta = reward.theta
    return float(
        theta @ (oracle.feat_exp - demo_featexp)
        - lam * oracle.entropy
        - 0.5 * mu * float(theta @ theta)
    )


def exact_grad_omega(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy: SoftmaxPolicy,
    reward: KernelReward,
    lam: float,
    oracle: PolicyOracle | None = None,
) -> np.ndarray:
    """Policy-gradient form of grad_omega F, shape (n_actions, d_S)."""
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy)
    return oracle.grad_omega(reward.theta, lam)


def exact_grad_theta(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy: SoftmaxPolicy,
    reward: KernelReward,
    mu: float,
    demo_featexp: np.ndarray,
    oracle: PolicyOracle | None = None,
) -> np.ndarray:
    """G(pi_omega) - demo feature expectation - mu * theta."""
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy)
    return oracle.feat_exp - np.asarray(demo_featexp, float) - mu * reward.theta


@dataclass(frozen=True, eq=False)
class ExactEval:
    """Bundle of exact quantities at one (omega, theta) point."""

    avg_reward: float
    q_function: np.ndarray
    F_value: float
    grad_omega: np.ndarray
    grad_theta: np.ndarray


def evaluate_exact(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy: SoftmaxPolicy,
    reward: KernelReward,
    lam: float,
    mu: float,
    demo_featexp: np.ndarray,
    oracle: PolicyOracle | None = None,
) -> ExactEval:
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy)
    theta = reward.theta
    return ExactEval(
        avg_reward=float(theta @ oracle.feat_exp),
        q_function=oracle.q_channels @ theta,
        F_value=exact_objective(mdp, fs, policy, reward, lam, mu, demo_featexp, oracle),
        grad_omega=oracle.grad_omega(theta, lam),
        grad_theta=exact_grad_theta(mdp, fs, policy, reward, mu, demo_featexp, oracle),
    )


def lipschitz_constants(
    rc: RegularityConstants, fs: FeatureSystem, kappa: float, q: int
) -> tuple[float, float]:
    """Smoothness constants of the exact gradients.

    L_omega bounds the omega-Lipschitz modulus of grad_omega F; S_omega
    bounds the omega-sensitivity of grad_theta F.
    """
    geom = kappa * fs.rho_g * rc.chi / (1.0 - rc.upsilon)
    L_omega = 2.0 * np.sqrt(2.0) * (rc.S_pi + 2.0 * rc.B_omega * rc.L_rho) * geom \
        + rc.B_omega * rc.L_Q
    S_omega = 2.0 * np.sqrt(2.0 * q) * geom * rc.B_omega
    return float(L_omega), float(S_omega)


def bias_bound(kappa: float, rho_g: float, chi: float, upsilon: float) -> float:
    """Sup-norm bound on the bias function: 2 sqrt(2) kappa rho_g chi / (1 - upsilon)."""
    return 2.0 * np.sqrt(2.0) * kappa * rho_g * chi / (1.0 - upsilon)


def objective_lower_bound(rho_g: float, kappa: float, mu: float, lam: float, B_H: float) -> float:
    """F can never fall below -(2 sqrt(2) rho_g kappa + mu kappa^2 / 2 + lam B_H)."""
    return -(2.0 * np.sqrt(2.0) * rho_g * kappa + 0.5 * mu * kappa**2 + lam * B_H)


@dataclass(frozen=True)
class AuditRow:
    constant: str
    bound: float
    observed: float

    @property
    def ok(self) -> bool:
        return bool(self.observed <= self.bound + 1e-9)


def audit_gradient_regularity(
    mdp: TabularMDP,
    fs: FeatureSystem,
    rc: RegularityConstants,
    kappa: float,
    mu: float,
    n_pairs: int,
    seed: int,
    radius: float = 5.0,
) -> list[AuditRow]:
    """Probe random parameter pairs and compare observed moduli to bounds.

    Emits rows for the gradient smoothness constants, the score bound, the
    bias sup-norm bound, the theta-affinity slope of grad_theta (an identity,
    so its observed error is compared to 1e-12), and the objective floor.
    Probing runs at lam = 0, matching the constants' derivation.
    """
    rng = np.random.default_rng(seed)
    L_omega, S_omega = lipschitz_constants(rc, fs, kappa, fs.q)
    bq = bias_bound(kappa, fs.rho_g, rc.chi, rc.upsilon)
    floor = objective_lower_bound(fs.rho_g, kappa, mu, 0.0, rc.B_H)
    shape = (fs.n_actions, fs.d_S)

    worst_l = worst_s = worst_bq = worst_score = 0.0
    worst_slope_err = 0.0
    worst_floor_gap = -np.inf  # max of (floor - F); ok when <= 0
    zero_fe = np.zeros(fs.q)
    for _ in range(n_pairs):
        w1 = rng.uniform(-radius, radius, size=shape)
        w2 = w1 + rng.standard_normal(shape) * rng.uniform(0.01, 1.0)
        gap = float(np.linalg.norm(w1 - w2))
        if gap < 1e-9:
            continue
        theta = rng.standard_normal(fs.q)
        theta *= kappa * rng.random() / np.linalg.norm(theta)
        reward = KernelReward(theta=theta, kappa=kappa)
        o1 = build_policy_oracle(mdp, fs, make_policy(fs, w1))
        o2 = build_policy_oracle(mdp, fs, make_policy(fs, w2))
        g1 = o1.grad_omega(theta, 0.0)
        g2 = o2.grad_omega(theta, 0.0)
        worst_l = max(worst_l, float(np.linalg.norm(g1 - g2)) / gap)
        worst_s = max(worst_s, float(np.linalg.norm(o1.feat_exp - o2.feat_exp)) / gap)
        worst_bq = max(worst_bq, float(np.abs(o1.q_channels @ theta).max()))
        worst_score = max(worst_score,
                          float(np.linalg.norm(o1.score.reshape(o1.chain.n_pairs, -1), axis=1).max()))
        # grad_theta(theta1) - grad_theta(theta2) = -mu (theta1 - theta2) exactly.
        theta2 = rng.standard_normal(fs.q)
        theta2 *= kappa * rng.random() / np.linalg.norm(theta2)
        d_grad = (o1.feat_exp - zero_fe - mu * theta) - (o1.feat_exp - zero_fe - mu * theta2)
        worst_slope_err = max(worst_slope_err,
                              float(np.abs(d_grad + mu * (theta - theta2)).max()))
        F = float(theta @ (o1.feat_exp - o2.feat_exp) - 0.5 * mu * theta @ theta)
        worst_floor_gap = max(worst_floor_gap, floor - F)
    return [
        AuditRow("L_omega", L_omega, worst_l),
        AuditRow("S_omega", S_omega, worst_s),
        AuditRow("B_Q", bq, worst_bq),
        AuditRow("B_omega", rc.B_omega, worst_score),
        AuditRow("theta_affinity_error", 1e-12, worst_slope_err),
        AuditRow("F_floor_gap", 0.0, worst_floor_gap),
    ]


def entropy_of(mdp: TabularMDP, fs: FeatureSystem, policy: SoftmaxPolicy,
               chain: PolicyChain | None = None) -> float:
    if chain is None:
        chain = induced_chain(mdp, policy)
    return policy_entropy(policy, fs, chain)
