"""Trajectory simulation, demonstration data, and stochastic gradients.

Randomness is threaded through counter-based Philox streams keyed by
(root seed, stream id, index), so every trajectory and every mini-batch is
reproducible and independently parallelizable; results are reduced in fixed
order for bit-reproducibility.

By default the estimators draw state-action pairs directly from the exact
stationary vector of the current policy chain, which makes unbiasedness an
identity rather than an approximation; sampling from simulated trajectory
prefixes is available behind `pair_source="trajectory"` for realism
experiments. The omega estimator plugs exact bias values into the score
(policy-gradient) form, so its only noise is the pair draw; a truncated
rollout return is available behind `use_rollout_q=True` and carries a
geometric truncation bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureSystem
from .mdp import PolicyChain, TabularMDP, induced_chain
from .oracles import PolicyOracle, build_policy_oracle
from .fileio import atomic_write_text
from .validation import check_state_action_pairs

# Stream identifiers for named substreams under one root seed.
STREAM_ROLLOUT = 1
STREAM_THETA = 2
STREAM_OMEGA = 3
STREAM_THETA_STAR = 4
STREAM_MOMENT = 5
STREAM_PROBE = 6
STREAM_DEMO_BATCH = 9


def substream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for the (seed, stream, index) lane."""
    lane = (int(stream) << 48) | int(index)
    key = np.array([np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), np.uint64(lane)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """n trajectories of T retained steps each."""

    states: np.ndarray  # (n, T) int64
    actions: np.ndarray  # (n, T) int64
    seed: int = -1

    def __post_init__(self):
        if self.states.shape != self.actions.shape or self.states.ndim != 2:
            raise ValueError("states and actions must share an (n, T) shape")
        self.states.setflags(write=False)
        self.actions.setflags(write=False)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def T(self) -> int:
        return self.states.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.states.size

    def pairs(self) -> np.ndarray:
        """All (state, action) rows in trajectory-major, time-minor order."""
        return np.stack([self.states.reshape(-1), self.actions.reshape(-1)], axis=1)


def rollout(
    mdp: TabularMDP,
    policy,
    n: int,
    T: int,
    seed: int,
    burn_in: int = 0,
) -> TrajectoryBatch:
    """Simulate n trajectories of T retained steps under the policy.

    Each trajectory owns the Philox lane (seed, STREAM_ROLLOUT, index), so the
    batch is reproducible and trajectories can be generated in any order.
    `burn_in` extra prefix steps are simulated and discarded so retained
    samples approximate the stationary regime.
    """
    if n < 1 or T < 1:
        raise ValueError("n and T must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    probs_cum = np.cumsum(policy.prob_table(), axis=1)
    trans_cum = np.cumsum(mdp.transition, axis=2)
    p0_cum = np.cumsum(mdp.initial_dist)
    A = mdp.n_actions
    Smax = mdp.n_states - 1
    steps = burn_in + T
    states = np.empty((n, T), dtype=np.int64)
    actions = np.empty((n, T), dtype=np.int64)
    for i in range(n):
        rng = substream(seed, STREAM_ROLLOUT, i)
        u = rng.random((steps + 1, 2))
        s = min(int(np.searchsorted(p0_cum, u[0, 0])), Smax)
        for t in range(steps):
            a = min(int(np.searchsorted(probs_cum[s], u[t + 1, 0])), A - 1)
            if t >= burn_in:
                states[i, t - burn_in] = s
                actions[i, t - burn_in] = a
            s = min(int(np.searchsorted(trans_cum[s, a], u[t + 1, 1])), Smax)
    return TrajectoryBatch(states=states, actions=actions, seed=seed)


def empirical_feature_expectation(batch: TrajectoryBatch, fs: FeatureSystem) -> np.ndarray:
    """Average reward feature vector over all retained pairs."""
    if batch.n_pairs == 0:
        raise ValueError("empty trajectory batch")
    table = fs.feature_table()
    return table[batch.states.reshape(-1), batch.actions.reshape(-1)].mean(axis=0)


@dataclass(frozen=True, eq=False)
class StochGrad:
    value: np.ndarray
    batch_size: int
    kind: str  # "theta" | "omega" | "theta_star"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _draw_pairs(
    mdp: TabularMDP,
    policy,
    chain: PolicyChain,
    size: int,
    rng: np.random.Generator,
    pair_source: str,
) -> np.ndarray:
    if pair_source == "stationary":
        return rng.choice(chain.n_pairs, size=size, p=chain.stationary)
    if pair_source == "trajectory":
        seed = int(rng.integers(0, 2**48))
        batch = rollout(mdp, policy, 1, size, seed, burn_in=64)
        return batch.states.reshape(-1) * mdp.n_actions + batch.actions.reshape(-1)
    raise ValueError(f"unknown pair_source {pair_source!r}")


def stoch_grad_theta(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy,
    reward,
    mu: float,
    demo_fe: np.ndarray,
    q_theta: int,
    seed: int,
    *,
    index: int = 0,
    chain: PolicyChain | None = None,
    pair_source: str = "stationary",
) -> StochGrad:
    """Mini-batch estimate of grad_theta F; unbiased under stationary draws."""
    if q_theta < 1:
        raise ValueError("q_theta must be >= 1")
    if chain is None:
        chain = induced_chain(mdp, policy)
    rng = substream(seed, STREAM_THETA, index)
    idx = _draw_pairs(mdp, policy, chain, q_theta, rng, pair_source)
    g_flat = fs.feature_table().reshape(chain.n_pairs, fs.q)
    value = g_flat[idx].mean(axis=0) - np.asarray(demo_fe, float) - mu * reward.theta
    return StochGrad(value=value, batch_size=q_theta, kind="theta")


def stoch_grad_omega(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy,
    reward,
    lam: float,
    q_omega: int,
    seed: int,
    *,
    index: int = 0,
    chain: PolicyChain | None = None,
    oracle: PolicyOracle | None = None,
    pair_source: str = "stationary",
    use_rollout_q: bool = False,
    rollout_horizon: int = 64,
) -> StochGrad:
    """Mini-batch estimate of grad_omega F in score form.

    Default mode reads exact bias values at the sampled pairs, so the
    estimator is exactly unbiased. With `use_rollout_q` the bias is replaced
    by a length-`rollout_horizon` centered return simulated from each sampled
    pair; the induced bias decays geometrically in the horizon.
    """
    if q_omega < 1:
        raise ValueError("q_omega must be >= 1")
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy, chain=chain)
    chain = oracle.chain
    rng = substream(seed, STREAM_OMEGA, index)
    idx = _draw_pairs(mdp, policy, chain, q_omega, rng, pair_source)
    if use_rollout_q:
        qvals = _rollout_bias_estimates(mdp, fs, policy, reward, lam, oracle, idx,
                                        rollout_horizon, rng)
    else:
        qvals = oracle.q_table(reward.theta, lam).reshape(-1)[idx]
    score_flat = oracle.score.reshape(chain.n_pairs, policy.n_actions, -1)
    value = np.einsum("xij,x->ij", score_flat[idx], qvals) / q_omega
    return StochGrad(value=value.reshape(policy.n_actions, fs.d_S), batch_size=q_omega,
                     kind="omega")


def _rollout_bias_estimates(mdp, fs, policy, reward, lam, oracle, idx, horizon, rng):
    """Centered truncated returns from each starting pair."""
    r_table = reward.table(fs)
    if lam != 0.0:
        r_table = r_table + lam * policy.log_prob_table()  # reward minus lam*(-log pi)
    r_flat = r_table.reshape(-1)
    gain = float(oracle.chain.stationary @ r_flat)
    probs_cum = np.cumsum(policy.prob_table(), axis=1)
    trans_cum = np.cumsum(mdp.transition, axis=2)
    A = mdp.n_actions
    out = np.empty(len(idx))
    for j, x in enumerate(idx):
        s, a = divmod(int(x), A)
        total = 0.0
        u = rng.random((horizon, 2))
        for t in range(horizon):
            total += r_flat[s * A + a] - gain
            s = min(int(np.searchsorted(trans_cum[s, a], u[t, 0])), mdp.n_states - 1)
            a = min(int(np.searchsorted(probs_cum[s], u[t, 1])), A - 1)
        out[j] = total
    return out


def theta_star_estimator(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy,
    demo_fe: np.ndarray,
    mu: float,
    batch: int,
    seed: int,
    *,
    index: int = 0,
    chain: PolicyChain | None = None,
) -> np.ndarray:
    """Unbiased estimate of the inner maximizer (1/mu)(G(pi) - demo_fe)."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    if chain is None:
        chain = induced_chain(mdp, policy)
    rng = substream(seed, STREAM_THETA_STAR, index)
    idx = rng.choice(chain.n_pairs, size=batch, p=chain.stationary)
    g_flat = fs.feature_table().reshape(chain.n_pairs, fs.q)
    return (g_flat[idx].mean(axis=0) - np.asarray(demo_fe, float)) / mu


def demo_minibatch_fe(
    batch: TrajectoryBatch,
    fs: FeatureSystem,
    min_pairs: int,
    seed: int,
    index: int = 0,
) -> np.ndarray:
    """Feature average over a random subset of whole trajectories holding at
    least `min_pairs` state-action pairs.

    Trajectories are drawn without replacement, so the subset mean is an
    unbiased estimate of the full demonstration feature expectation.
    """
    if min_pairs < 1:
        raise ValueError("min_pairs must be >= 1")
    n_traj = min(batch.n, -(-min_pairs // batch.T))
    rng = substream(seed, STREAM_DEMO_BATCH, index)
    chosen = rng.choice(batch.n, size=n_traj, replace=False)
    table = fs.feature_table()
    states = batch.states[chosen].reshape(-1)
    actions = batch.actions[chosen].reshape(-1)
    return table[states, actions].mean(axis=0)


# ---------------------------------------------------------------------------
# Noise second moments
# ---------------------------------------------------------------------------

def noise_moment_theta(fs: FeatureSystem, chain: PolicyChain) -> float:
    """Exact single-sample second moment E||g(X) - G(pi)||^2, X ~ stationary.

    The -mu*theta and demonstration terms of the estimator are deterministic,
    so this is the full noise moment of the theta gradient estimate."""
    g_flat = fs.feature_table().reshape(chain.n_pairs, fs.q)
    mean = chain.stationary @ g_flat
    centered = g_flat - mean[None, :]
    return float(chain.stationary @ np.einsum("xq,xq->x", centered, centered))


def noise_moment_omega(oracle: PolicyOracle, theta: np.ndarray, lam: float) -> float:
    """Exact single-sample second moment of the omega estimator noise."""
    n = oracle.chain.n_pairs
    qvals = oracle.q_table(theta, lam).reshape(-1)
    score_sq = np.einsum("xk,xk->x", oracle.score.reshape(n, -1), oracle.score.reshape(n, -1))
    second = float(oracle.chain.stationary @ (score_sq * qvals**2))
    mean = oracle.grad_omega(theta, lam)
    return second - float(np.sum(mean * mean))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    n_draws: int

    @property
    def upper(self) -> float:
        """Mean plus three standard errors; the value fed into bounds."""
        return self.mean + 3.0 * self.stderr


def greedy_gradient_second_moment(
    mdp: TabularMDP,
    fs: FeatureSystem,
    policy,
    demo_fe: np.ndarray,
    mu: float,
    lam: float,
    q_theta: int,
    q_omega: int,
    n_draws: int,
    seed: int,
    *,
    oracle: PolicyOracle | None = None,
) -> MomentEstimate:
    """Monte-Carlo estimate of E||grad estimate at (omega, theta_hat)||^2.

    Each draw samples a fresh inner-maximizer estimate and a fresh gradient
    mini-batch, exactly as one greedy step would.
    """
    if oracle is None:
        oracle = build_policy_oracle(mdp, fs, policy)
    chain = oracle.chain
    rng = substream(seed, STREAM_MOMENT)
    g_flat = fs.feature_table().reshape(chain.n_pairs, fs.q)
    score_flat = oracle.score.reshape(chain.n_pairs, -1)
    demo_fe = np.asarray(demo_fe, float)
    norms = np.empty(n_draws)
    for d in range(n_draws):
        idx_t = rng.choice(chain.n_pairs, size=q_theta, p=chain.stationary)
        theta_hat = (g_flat[idx_t].mean(axis=0) - demo_fe) / mu
        qvals = (oracle.q_channels.reshape(chain.n_pairs, fs.q) @ theta_hat
                 - lam * oracle.q_entropy.reshape(-1))
        idx_o = rng.choice(chain.n_pairs, size=q_omega, p=chain.stationary)
        grad = (score_flat[idx_o] * qvals[idx_o, None]).mean(axis=0)
        norms[d] = float(grad @ grad)
    mean = float(norms.mean())
    stderr = float(norms.std(ddof=1) / np.sqrt(n_draws)) if n_draws > 1 else 0.0
    return MomentEstimate(mean=mean, stderr=stderr, n_draws=n_draws)


# ---------------------------------------------------------------------------
# Demonstration files: CSV with header traj,t,state,action
# ---------------------------------------------------------------------------

def save_demos(path: str, batch: TrajectoryBatch) -> None:
    lines = ["traj,t,state,action"]
    for i in range(batch.n):
        for t in range(batch.T):
            lines.append(f"{i},{t},{batch.states[i, t]},{batch.actions[i, t]}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_demos(path: str, mdp: TabularMDP) -> TrajectoryBatch:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "traj,t,state,action":
            raise ValueError(f"{path}: expected header 'traj,t,state,action', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: no demonstration rows")
    n = int(data[:, 0].max()) + 1
    T = int(data[:, 1].max()) + 1
    if data.shape[0] != n * T:
        raise ValueError(f"{path}: expected {n * T} rows for {n} trajectories of length {T}")
    check_state_action_pairs(data[:, 2:4], mdp.n_states, mdp.n_actions)
    states = np.empty((n, T), dtype=np.int64)
    actions = np.empty((n, T), dtype=np.int64)
    states[data[:, 0], data[:, 1]] = data[:, 2]
    actions[data[:, 0], data[:, 1]] = data[:, 3]
    return TrajectoryBatch(states=states, actions=actions)
