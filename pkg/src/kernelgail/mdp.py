"""Finite MDPs, policy-induced chains, stationary distributions, and mixing.

A policy turns the controlled MDP into a Markov chain on state-action pairs
with kernel K[(s,a),(s',a')] = pi(a'|s') P(s'|s,a). Everything downstream
(average rewards, bias functions, feature expectations) is an expectation
under that chain's stationary distribution, so this module is the foundation:
it computes the stationary vector by power iteration, verifies ergodicity
instead of assuming it, and fits geometric envelopes chi * upsilon**t to
measured total-variation decay curves.

All types are immutable after construction and safe to share across threads;
operations are pure functions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import NonErgodicChain
from .fileio import load_kv, reject_unknown, save_kv, take_array, take_int
from .validation import check_distribution, check_transition_tensor

STATIONARY_TOL = 1e-12
TWO_START_TOL = 1e-8
DEFAULT_POWER_CAP = 100_000
ENVELOPE_SLACK = 1.05
DECAY_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite MDP: transition tensor P[s, a, s'], initial state distribution,
    and an optional ground-truth reward used only for evaluation."""

    n_states: int
    n_actions: int
    transition: np.ndarray
    initial_dist: np.ndarray
    eval_reward: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "transition",
                           check_transition_tensor(self.transition, self.n_states, self.n_actions))
        object.__setattr__(self, "initial_dist",
                           check_distribution(self.initial_dist, "initial_dist"))
        if self.eval_reward is not None:
            r = np.asarray(self.eval_reward, dtype=float)
            if r.shape != (self.n_states, self.n_actions):
                raise ValueError(
                    f"eval_reward must have shape {(self.n_states, self.n_actions)}, got {r.shape}"
                )
            object.__setattr__(self, "eval_reward", r)
        self.transition.setflags(write=False)
        self.initial_dist.setflags(write=False)
        if self.eval_reward is not None:
            self.eval_reward.setflags(write=False)

    @property
    def n_pairs(self) -> int:
        return self.n_states * self.n_actions

    def pair_index(self, s: int, a: int) -> int:
        return s * self.n_actions + a


@dataclass(frozen=True)
class MixingFit:
    """Geometric envelope for a TV decay curve: d_t <= chi * upsilon**t."""

    chi: float
    upsilon: float
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class PolicyChain:
    """Markov chain on state-action pairs induced by a fixed policy."""

    kernel: np.ndarray
    stationary: np.ndarray
    policy_fingerprint: str
    mixing: MixingFit | None = field(default=None, compare=False)

    def __post_init__(self):
        self.kernel.setflags(write=False)
        self.stationary.setflags(write=False)

    @property
    def n_pairs(self) -> int:
        return self.kernel.shape[0]

    def with_mixing(self, mixing: MixingFit) -> "PolicyChain":
        return PolicyChain(self.kernel, self.stationary, self.policy_fingerprint, mixing)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation on a finite space: half the l1 distance."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _power_iterate(kernel: np.ndarray, start: np.ndarray, tol: float, cap: int) -> np.ndarray:
    """Iterate x <- x K to the numerical fixed point.

    Runs past `tol` down to the machine-precision plateau (downstream decay
    curves need the stationary vector accurate to ~1e-15, not just 1e-12);
    raises NonErgodicChain if `tol` itself is never reached within the cap.
    """
    x = start.copy()
    best = np.inf
    stall = 0
    for _ in range(cap):
        x_next = x @ kernel
        x_next /= x_next.sum()
        diff = float(np.abs(x_next - x).max())
        x = x_next
        if diff <= 1e-16:
            break
        if diff < 0.5 * best:
            best = min(best, diff)
            stall = 0
        else:
            stall += 1
            if stall >= 30 and diff <= tol:
                break
    residual = float(np.abs(x @ kernel - x).max())
    if residual > 10 * tol:
        raise NonErgodicChain(
            f"power iteration stalled at residual {residual:g} (tolerance {tol:g}, cap {cap})"
        )
    return x


def induced_chain(
    mdp: TabularMDP,
    policy,
    *,
    init_guess: np.ndarray | None = None,
    verify_ergodic: bool = True,
    power_cap: int = DEFAULT_POWER_CAP,
) -> PolicyChain:
    """Build the pair chain K[(s,a),(s',a')] = pi(a'|s') P(s'|s,a) and its
    stationary distribution.

    The stationary vector comes from power iteration to a 1e-12 fixed-point
    tolerance. Ergodicity is verified, not assumed: with `verify_ergodic` a
    second run from a point-mass start must reach the same fixed point within
    1e-8, otherwise NonErgodicChain is raised. `init_guess` warm-starts the
    iteration (useful when the policy changed only slightly).
    """
    probs = policy.prob_table()  # (S, A), rows sum to 1
    if probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(
            f"policy table shape {probs.shape} does not match MDP {(mdp.n_states, mdp.n_actions)}"
        )
    n = mdp.n_pairs
    # K[(s,a),(s',a')] = P(s'|s,a) * pi(a'|s')
    flat_next = mdp.transition.reshape(n, mdp.n_states)
    kernel = (flat_next[:, :, None] * probs[None, :, :]).reshape(n, n)

    start = np.full(n, 1.0 / n) if init_guess is None else np.asarray(init_guess, float) / np.sum(init_guess)
    stationary = _power_iterate(kernel, start, STATIONARY_TOL, power_cap)
    if verify_ergodic:
        point = np.zeros(n)
        point[0] = 1.0
        other = _power_iterate(kernel, point, STATIONARY_TOL, power_cap)
        if np.abs(other - stationary).max() > TWO_START_TOL:
            raise NonErgodicChain(
                "two starting distributions converged to different fixed points "
                f"(disagreement {np.abs(other - stationary).max():g})"
            )
    return PolicyChain(kernel=kernel, stationary=stationary,
                       policy_fingerprint=policy.fingerprint())


def _fit_envelope(d: np.ndarray, t: np.ndarray, upsilon_cap: float = 1.0 - 1e-12) -> tuple[float, float]:
    """Least-squares fit of log d = log chi + t log upsilon over the
    measurable range d > 1e-13, then inflate chi until d_t <= chi * upsilon**t
    holds at every measured point in that range. Points at or below the floor
    are numerical dust and play no role."""
    # Points at the numerical plateau (the computed stationary vector is only
    # accurate to ~1e-12) would flatten the slope; trim them along with dust.
    plateau = 3.0 * float(d.min()) if d.size else 0.0
    mask = d > max(DECAY_FLOOR, plateau)
    if not np.any(mask):
        mask = d > DECAY_FLOOR
    tm = t[mask].astype(float)
    dm = d[mask]
    if mask.sum() >= 2:
        A = np.stack([np.ones(mask.sum()), tm], axis=1)
        coef, *_ = np.linalg.lstsq(A, np.log(dm), rcond=None)
        chi = float(np.exp(coef[0]))
        upsilon = float(np.exp(coef[1]))
    else:
        chi = float(d.max()) if d.size else 1.0
        upsilon = 0.5
    upsilon = min(max(upsilon, 1e-16), upsilon_cap)
    chi = max(chi, 1e-300)
    if dm.size:
        ratio = float(np.max(dm * np.exp(-tm * np.log(upsilon))))
        if ratio > chi:
            chi = ratio
    return chi, upsilon


def fit_mixing(chain: PolicyChain, rho0, horizon: int) -> MixingFit:
    """Fit d_t = TV(rho0 K^t, stationary) with a geometric envelope.

    Returns (chi, upsilon) with d_t <= 1.05 * chi * upsilon**t for every
    measured t in 1..horizon. If the chain mixes in a single step the fit is
    degenerate and (1, machine epsilon) is returned with the `degenerate`
    flag set.
    """
    if horizon < 10:
        raise ValueError(f"horizon must be >= 10, got {horizon}")
    rho0 = check_distribution(np.asarray(rho0, float).reshape(-1), "rho0")
    if rho0.shape != chain.stationary.shape:
        raise ValueError("rho0 dimension does not match the chain")
    d = np.empty(horizon)
    x = rho0.copy()
    for t in range(1, horizon + 1):
        x = x @ chain.kernel
        d[t - 1] = tv_distance(x, chain.stationary)
    if d[0] < DECAY_FLOOR:
        return MixingFit(chi=1.0, upsilon=float(np.finfo(float).eps), degenerate=True)
    chi, upsilon = _fit_envelope(d, np.arange(1, horizon + 1))
    return MixingFit(chi=chi, upsilon=upsilon)


def worst_start_tv_curve(chain: PolicyChain, kmax: int) -> np.ndarray:
    """beta_hat(k) = max over point-mass starts x of TV(K^k(x,.), stationary),
    for k = 1..kmax. Upper-bounds the dependence coefficient of the
    stationary chain."""
    power = chain.kernel.copy()
    out = np.empty(kmax)
    for k in range(1, kmax + 1):
        out[k - 1] = 0.5 * float(np.abs(power - chain.stationary[None, :]).sum(axis=1).max())
        if k < kmax:
            power = power @ chain.kernel
    return out


@dataclass(frozen=True)
class BetaMixingCurve:
    values: np.ndarray  # beta_hat(k) for k = 1..kmax
    beta0: float
    beta1: float


def beta_mixing_curve(chain: PolicyChain, kmax: int) -> BetaMixingCurve:
    """Worst-start TV decay curve with a fitted bound beta0 * exp(-beta1 k).

    Finite ergodic chains mix geometrically, so the exponent alpha is fixed
    to 1. The fitted pair is inflated until it dominates every measured k.
    """
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    values = worst_start_tv_curve(chain, kmax)
    if values.max() < DECAY_FLOOR:
        # Chain is i.i.d. from step one; any decaying bound works.
        return BetaMixingCurve(values=values, beta0=1.0, beta1=1.0)
    chi, upsilon = _fit_envelope(values, np.arange(1, kmax + 1))
    return BetaMixingCurve(values=values, beta0=chi, beta1=float(-np.log(upsilon)))


def fit_mixing_worst_start(chain: PolicyChain, horizon: int) -> MixingFit:
    """Envelope (chi, upsilon) valid from EVERY starting pair, including t=0.

    This is the envelope the bias-function bound needs: the decay curve is
    the worst-start TV curve, and chi is additionally inflated so the t=0
    distance (at most 1) is covered.
    """
    d = worst_start_tv_curve(chain, horizon)
    if d[0] < DECAY_FLOOR:
        return MixingFit(chi=1.0, upsilon=float(np.finfo(float).eps), degenerate=True)
    chi, upsilon = _fit_envelope(d, np.arange(1, horizon + 1))
    d0 = 0.5 * float(np.abs(np.eye(chain.n_pairs) - chain.stationary[None, :]).sum(axis=1).max())
    chi = max(chi, d0)
    return MixingFit(chi=chi, upsilon=upsilon)


def pair_distribution(mdp: TabularMDP, policy) -> np.ndarray:
    """Initial distribution over (s, a): p0(s) * pi(a|s), flattened."""
    return (mdp.initial_dist[:, None] * policy.prob_table()).reshape(-1)


# ---------------------------------------------------------------------------
# Average-reward planning (used to construct expert policies)
# ---------------------------------------------------------------------------

def state_chain(mdp: TabularMDP, probs: np.ndarray) -> np.ndarray:
    """State-to-state kernel sum_a pi(a|s) P(s'|s,a)."""
    return np.einsum("sa,sat->st", probs, mdp.transition)


def average_reward_policy_iteration(
    mdp: TabularMDP, reward: np.ndarray | None = None, max_iters: int = 1_000
) -> tuple[np.ndarray, float]:
    """Howard policy iteration for the average-reward criterion.

    Returns (greedy_actions, gain). Policy evaluation solves the state-level
    system (I - P_pi) h + J 1 = r_pi with h pinned at state 0; improvement is
    greedy in r(s,a) + sum_s' P(s'|s,a) h(s'). Assumes a unichain MDP.
    """
    r = mdp.eval_reward if reward is None else np.asarray(reward, float)
    if r is None:
        raise ValueError("policy iteration needs a reward table")
    S, A = mdp.n_states, mdp.n_actions
    actions = np.zeros(S, dtype=np.int64)
    for _ in range(max_iters):
        P_pi = mdp.transition[np.arange(S), actions]  # (S, S)
        r_pi = r[np.arange(S), actions]
        # Unknowns (h_0..h_{S-1}, J) with h_0 = 0 enforced by dropping column 0.
        M = np.zeros((S, S))
        M[:, :-1] = (np.eye(S) - P_pi)[:, 1:]
        M[:, -1] = 1.0
        sol = np.linalg.solve(M, r_pi)
        h = np.concatenate([[0.0], sol[:-1]])
        gain = float(sol[-1])
        q = r + mdp.transition @ h
        new_actions = np.argmax(q, axis=1)
        if np.array_equal(new_actions, actions):
            return actions, gain
        actions = new_actions
    raise RuntimeError("policy iteration did not stabilize")


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def save_mdp(path: str, mdp: TabularMDP) -> None:
    data = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "transition": mdp.transition,
        "initial_dist": mdp.initial_dist,
    }
    if mdp.eval_reward is not None:
        data["eval_reward"] = mdp.eval_reward
    save_kv(path, data)


def load_mdp(path: str) -> TabularMDP:
    kv = load_kv(path)
    n_states = take_int(kv, "n_states", path)
    n_actions = take_int(kv, "n_actions", path)
    transition = take_array(kv, "transition", (n_states, n_actions, n_states), path)
    initial = take_array(kv, "initial_dist", (n_states,), path)
    eval_reward = None
    if "eval_reward" in kv:
        eval_reward = take_array(kv, "eval_reward", (n_states, n_actions), path)
    reject_unknown(kv, path)
    return TabularMDP(n_states=n_states, n_actions=n_actions, transition=transition,
                      initial_dist=initial, eval_reward=eval_reward)


def mdp_fingerprint(mdp: TabularMDP) -> str:
    h = hashlib.sha256()
    h.update(np.int64(mdp.n_states).tobytes())
    h.update(np.int64(mdp.n_actions).tobytes())
    h.update(mdp.transition.tobytes())
    h.update(mdp.initial_dist.tobytes())
    return h.hexdigest()[:16]
