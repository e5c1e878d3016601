"""Log-linear softmax policies and their regularity constants.

pi(a|s) is proportional to exp(omega_a . psi_s / temperature): one weight
vector per action over state features. The score (gradient of the
log-probability) has the closed form (e_a - pi(.|s)) (x) psi_s, which is
zero-mean under the policy at every state and has norm at most
sqrt(2) max_s ||psi_s||. Quantities with no closed-form constant (score
smoothness, stationary-distribution and bias-function sensitivity, entropy
gradient smoothness) are estimated by probing random parameter pairs and
inflating the worst observed ratio by a safety factor.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ChainMismatch
from .features import FeatureSystem
from .fileio import load_kv, reject_unknown, save_kv, take_array, take_float, take_int, take_str
from .mdp import (
    PolicyChain,
    TabularMDP,
    fit_mixing_worst_start,
    induced_chain,
)
from .validation import check_index

DEFAULT_PROBE_RADIUS = 5.0
DEFAULT_SAFETY = 1.5


@dataclass(frozen=True, eq=False)
class SoftmaxPolicy:
    """Immutable log-linear policy; optimizers build a new instance per step."""

    omega: np.ndarray  # (n_actions, d_S)
    temperature: float = 1.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim != 2:
            raise ValueError(f"omega must be (n_actions, d_S), got shape {omega.shape}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature!r}")
        object.__setattr__(self, "omega", omega)
        self.omega.setflags(write=False)

    @property
    def n_actions(self) -> int:
        return self.omega.shape[0]

    @property
    def d_S(self) -> int:
        return self.omega.shape[1]

    def attach_features(self, fs: FeatureSystem) -> "SoftmaxPolicy":
        if fs.d_S != self.d_S or fs.n_actions != self.n_actions:
            raise ValueError("feature system does not match policy dimensions")
        object.__setattr__(self, "_fs", fs)
        return self

    def _features(self) -> FeatureSystem:
        fs = self.__dict__.get("_fs")
        if fs is None:
            raise ValueError("policy has no attached feature system; call attach_features")
        return fs

    def prob_table(self) -> np.ndarray:
        """pi(a|s) for the whole grid, shape (n_states, n_actions); cached."""
        cached = self.__dict__.get("_probs")
        if cached is None:
            fs = self._features()
            logits = fs.psi_s @ self.omega.T / self.temperature
            logits -= logits.max(axis=1, keepdims=True)
            expl = np.exp(logits)
            cached = expl / expl.sum(axis=1, keepdims=True)
            cached.setflags(write=False)
            object.__setattr__(self, "_probs", cached)
        return cached

    def log_prob_table(self) -> np.ndarray:
        return np.log(self.prob_table())

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.omega).tobytes())
        h.update(np.float64(self.temperature).tobytes())
        return h.hexdigest()[:16]

    def replace_omega(self, omega: np.ndarray) -> "SoftmaxPolicy":
        new = SoftmaxPolicy(omega=np.array(omega, dtype=float), temperature=self.temperature)
        return new.attach_features(self._features())


def make_policy(fs: FeatureSystem, omega: np.ndarray, temperature: float = 1.0) -> SoftmaxPolicy:
    return SoftmaxPolicy(omega=np.array(omega, dtype=float), temperature=temperature).attach_features(fs)


def uniform_policy(fs: FeatureSystem, temperature: float = 1.0) -> SoftmaxPolicy:
    return make_policy(fs, np.zeros((fs.n_actions, fs.d_S)), temperature)


def log_prob_grad(policy: SoftmaxPolicy, fs: FeatureSystem, s: int, a: int) -> np.ndarray:
    """Gradient of log pi(a|s) in omega, shape (n_actions, d_S).

    Row a gets (1 - pi(a|s)) psi_s; every other row a' gets -pi(a'|s) psi_s.
    """
    s = check_index(s, fs.n_states, "s")
    a = check_index(a, fs.n_actions, "a")
    probs = policy.prob_table()[s]
    coeff = -probs.copy()
    coeff[a] += 1.0
    return np.outer(coeff, fs.psi_s[s]) / policy.temperature


def score_table(policy: SoftmaxPolicy, fs: FeatureSystem) -> np.ndarray:
    """All score gradients at once, shape (n_states, n_actions, n_actions, d_S)."""
    probs = policy.prob_table()
    S, A = probs.shape
    coeff = np.eye(A)[None, :, :] - probs[:, None, :]  # (S, a_taken, a')
    return coeff[:, :, :, None] * fs.psi_s[:, None, None, :] / policy.temperature


def entropy(policy: SoftmaxPolicy, fs: FeatureSystem, chain: PolicyChain) -> float:
    """Stationary-average conditional entropy E_rho[-log pi(a|s)].

    The chain must have been induced by this exact policy; a fingerprint
    mismatch raises ChainMismatch. Values lie in [0, log n_actions].
    """
    if chain.policy_fingerprint != policy.fingerprint():
        raise ChainMismatch("chain was induced by a different policy parameter")
    rho = chain.stationary.reshape(fs.n_states, fs.n_actions)
    logp = policy.log_prob_table()
    return float(-(rho * logp).sum())


@dataclass(frozen=True)
class RegularityConstants:
    """Bounds and probe-estimated constants for the softmax policy class."""

    B_omega: float  # score norm bound (exact)
    S_pi: float  # score smoothness (estimated)
    L_rho: float  # stationary-distribution TV sensitivity (estimated)
    L_Q: float  # bias-function sup-norm sensitivity over the reward ball (estimated)
    B_H: float  # entropy bound (exact: log n_actions)
    S_H: float  # entropy-gradient smoothness (estimated)
    chi: float  # worst-start TV envelope scale
    upsilon: float  # worst-start TV envelope rate

    def __post_init__(self):
        for name in ("B_omega", "B_H", "chi"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) < 0:
                raise ValueError(f"{name} must be finite and nonnegative")
        if not 0.0 < self.upsilon < 1.0:
            raise ValueError(f"upsilon must lie in (0, 1), got {self.upsilon!r}")


def estimate_regularity(
    mdp: TabularMDP,
    fs: FeatureSystem,
    n_probe: int,
    seed: int,
    *,
    kappa: float = 1.0,
    radius: float = DEFAULT_PROBE_RADIUS,
    safety: float = DEFAULT_SAFETY,
    mixing_horizon: int = 200,
    temperature: float = 1.0,
) -> RegularityConstants:
    """Estimate the policy-class regularity constants by random probing.

    Exact pieces: the score bound sqrt(2) max ||psi_s|| / temperature and the
    entropy bound log n_actions. Estimated pieces take the max difference
    quotient over `n_probe` parameter pairs drawn in a `radius` ball and are
    inflated by `safety`. The bias-function sensitivity maximizes over the
    whole reward ball of size `kappa` in closed form (the bias is linear in
    the reward parameter). The mixing envelope (chi, upsilon) is the worst
    case over probed policies, measured from every starting pair.

    Deterministic given (seed, n_probe).
    """
    from . import oracles  # local import: oracles depends on this module

    if n_probe < 100:
        raise ValueError(f"n_probe must be >= 100, got {n_probe}")
    rng = np.random.default_rng(seed)
    shape = (fs.n_actions, fs.d_S)

    B_omega = float(np.sqrt(2.0) * np.linalg.norm(fs.psi_s, axis=1).max() / temperature)
    B_H = float(np.log(fs.n_actions))

    s_pi = l_rho = l_q = s_h = 0.0
    chi = 0.0
    upsilon = np.finfo(float).eps
    for _ in range(n_probe):
        w1 = rng.uniform(-radius, radius, size=shape)
        w2 = w1 + rng.standard_normal(shape) * rng.uniform(0.01, 1.0)
        gap = float(np.linalg.norm(w1 - w2))
        if gap < 1e-9:
            continue
        p1 = make_policy(fs, w1, temperature)
        p2 = make_policy(fs, w2, temperature)
        sc1 = score_table(p1, fs)
        sc2 = score_table(p2, fs)
        per_pair = np.linalg.norm((sc1 - sc2).reshape(fs.n_states, fs.n_actions, -1), axis=2)
        s_pi = max(s_pi, float(per_pair.max()) / gap)

        c1 = induced_chain(mdp, p1)
        c2 = induced_chain(mdp, p2)
        l_rho = max(l_rho, 0.5 * float(np.abs(c1.stationary - c2.stationary).sum()) / gap)

        o1 = oracles.build_policy_oracle(mdp, fs, p1, chain=c1)
        o2 = oracles.build_policy_oracle(mdp, fs, p2, chain=c2)
        dq = np.linalg.norm(o1.q_channels - o2.q_channels, axis=2)  # sup over theta-ball
        l_q = max(l_q, kappa * float(dq.max()) / gap)
        s_h = max(s_h, float(np.linalg.norm(o1.grad_entropy - o2.grad_entropy)) / gap)

        mix = fit_mixing_worst_start(c1, mixing_horizon)
        if not mix.degenerate:
            chi = max(chi, mix.chi)
            upsilon = max(upsilon, mix.upsilon)
    if chi == 0.0:
        chi = 1.0
    return RegularityConstants(
        B_omega=B_omega,
        S_pi=safety * s_pi,
        L_rho=safety * l_rho,
        L_Q=safety * l_q,
        B_H=B_H,
        S_H=safety * s_h,
        chi=chi,
        upsilon=float(upsilon),
    )


def fit_policy_to_actions(
    fs: FeatureSystem, actions: np.ndarray, margin: float = 6.0, temperature: float = 1.0
) -> SoftmaxPolicy:
    """Least-squares fit of omega so the chosen action leads each state's
    logits by `margin`. Keeps a deterministic target inside the softmax class
    (all probabilities stay positive, so induced chains stay ergodic)."""
    actions = np.asarray(actions, dtype=np.int64)
    if actions.shape != (fs.n_states,):
        raise ValueError(f"actions must have shape {(fs.n_states,)}, got {actions.shape}")
    targets = np.zeros((fs.n_states, fs.n_actions))
    targets[np.arange(fs.n_states), actions] = margin
    # One least-squares solve per action column: psi_s @ omega_a = target_a.
    omega, *_ = np.linalg.lstsq(fs.psi_s, targets, rcond=None)
    return make_policy(fs, omega.T * temperature, temperature)


def save_policy(path: str, policy: SoftmaxPolicy, fs: FeatureSystem) -> None:
    save_kv(path, {
        "n_actions": policy.n_actions,
        "d_S": policy.d_S,
        "temperature": policy.temperature,
        "omega": policy.omega,
        "feature_fingerprint": fs.fingerprint(),
    })


def load_policy(path: str, fs: FeatureSystem) -> SoftmaxPolicy:
    kv = load_kv(path)
    n_actions = take_int(kv, "n_actions", path)
    d_S = take_int(kv, "d_S", path)
    temperature = take_float(kv, "temperature", path)
    omega = take_array(kv, "omega", (n_actions, d_S), path)
    fp = take_str(kv, "feature_fingerprint", path)
    reject_unknown(kv, path)
    if fp != fs.fingerprint():
        raise ChainMismatch(
            f"{path}: checkpoint was written for a different feature system "
            f"(fingerprint {fp} != {fs.fingerprint()})"
        )
    return make_policy(fs, omega, temperature)
