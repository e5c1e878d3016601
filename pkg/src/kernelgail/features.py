"""State/action feature vectors and the reward feature map.

Rewards live in a ball of linear functionals over a randomized cosine
feature map: r(s, a) = theta . g(psi_s, psi_a) with ||theta|| <= kappa.
The raw cosine map does not vanish at the origin, so we use the shifted map
g(x) = sqrt(2/q) [cos(W x + b) - cos(b)], which is exactly zero at x = 0.
The shift changes every reward by a theta-dependent constant, which cancels
in all policy-vs-policy reward differences.

The map's Lipschitz constant rho_g is the smaller of the analytic bound
sqrt(2/q) ||W||_F and an empirical audit over sampled point pairs (inflated
by 5%); the audit always includes the realized feature grid and grid-vs-zero
pairs, so norm bounds derived from rho_g hold exactly on the grid.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .fileio import load_kv, reject_unknown, save_kv, take_array, take_float, take_int
from .validation import check_distribution, check_in_ball, check_index

LIPSCHITZ_AUDIT_PAIRS = 10_000
LIPSCHITZ_AUDIT_SLACK = 1.05


@dataclass(frozen=True, eq=False)
class FeatureSystem:
    """Per-state and per-action feature vectors plus the reward feature map."""

    d_S: int
    d_A: int
    q: int
    psi_s: np.ndarray  # (n_states, d_S), rows with norm <= 1
    psi_a: np.ndarray  # (n_actions, d_A), rows with norm <= 1
    g_weights: np.ndarray  # (q, d_S + d_A)
    g_phase: np.ndarray  # (q,)
    rho_g: float

    def __post_init__(self):
        for name, arr, dim in (("psi_s", self.psi_s, self.d_S), ("psi_a", self.psi_a, self.d_A)):
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise ValueError(f"{name} must have {dim} columns, got shape {arr.shape}")
            norms = np.linalg.norm(arr, axis=1)
            if np.any(norms > 1.0 + 1e-12):
                raise ValueError(f"{name} row {int(np.argmax(norms))} has norm {norms.max()!r} > 1")
        if self.g_weights.shape != (self.q, self.d_S + self.d_A):
            raise ValueError(f"g_weights must have shape {(self.q, self.d_S + self.d_A)}")
        if self.g_phase.shape != (self.q,):
            raise ValueError(f"g_phase must have shape {(self.q,)}")
        for arr in (self.psi_s, self.psi_a, self.g_weights, self.g_phase):
            arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.psi_s.shape[0]

    @property
    def n_actions(self) -> int:
        return self.psi_a.shape[0]

    def map_points(self, x: np.ndarray) -> np.ndarray:
        """Apply the shifted cosine map to points x of dimension d_S + d_A."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        scale = np.sqrt(2.0 / self.q)
        raw = np.cos(x @ self.g_weights.T + self.g_phase[None, :])
        return scale * (raw - np.cos(self.g_phase)[None, :])

    def feature_table(self) -> np.ndarray:
        """g evaluated on the realized grid, shape (n_states, n_actions, q).

        Cached after the first call; the system is immutable.
        """
        cached = self.__dict__.get("_table")
        if cached is None:
            S, A = self.n_states, self.n_actions
            pts = np.concatenate(
                [np.repeat(self.psi_s, A, axis=0), np.tile(self.psi_a, (S, 1))], axis=1
            )
            cached = self.map_points(pts).reshape(S, A, self.q)
            cached.setflags(write=False)
            object.__setattr__(self, "_table", cached)
        return cached

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.psi_s, self.psi_a, self.g_weights, self.g_phase):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(np.float64(self.rho_g).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class KernelReward:
    """Reward r(s,a) = theta . g(psi_s, psi_a) with theta in a kappa-ball."""

    theta: np.ndarray
    kappa: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        check_in_ball(theta, self.kappa, "theta")
        object.__setattr__(self, "theta", theta)
        self.theta.setflags(write=False)

    def table(self, fs: FeatureSystem) -> np.ndarray:
        """Dense reward table over the grid, shape (n_states, n_actions)."""
        return fs.feature_table() @ self.theta


def _uniform_in_ball(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(n) ** (1.0 / dim)
    return direction * radius[:, None]


def build_features(
    mdp,
    d_S: int,
    d_A: int,
    q: int,
    bandwidth: float,
    seed: int,
    pin_zero_pair: tuple[int, int] | None = None,
) -> FeatureSystem:
    """Draw feature vectors uniformly in the unit ball and a random cosine map.

    `bandwidth` is the standard deviation of the Gaussian frequency matrix W;
    phases are uniform on [0, 2*pi). `pin_zero_pair=(s, a)` zeroes the
    designated state and action features so the grid realizes the map's
    exact zero.
    """
    if min(d_S, d_A, q) < 1:
        raise ValueError("feature dimensions must be >= 1")
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    rng = np.random.default_rng(seed)
    psi_s = _uniform_in_ball(rng, mdp.n_states, d_S)
    psi_a = _uniform_in_ball(rng, mdp.n_actions, d_A)
    if pin_zero_pair is not None:
        s0 = check_index(pin_zero_pair[0], mdp.n_states, "pin state")
        a0 = check_index(pin_zero_pair[1], mdp.n_actions, "pin action")
        psi_s[s0] = 0.0
        psi_a[a0] = 0.0
    weights = bandwidth * rng.standard_normal((q, d_S + d_A))
    phase = rng.random(q) * 2.0 * np.pi

    fs = FeatureSystem(d_S=d_S, d_A=d_A, q=q, psi_s=psi_s, psi_a=psi_a,
                       g_weights=weights, g_phase=phase,
                       rho_g=float(np.sqrt(2.0 / q) * np.linalg.norm(weights)))
    audited = _lipschitz_audit(fs, rng)
    if audited < fs.rho_g:
        fs = FeatureSystem(d_S=d_S, d_A=d_A, q=q, psi_s=psi_s, psi_a=psi_a,
                           g_weights=weights, g_phase=phase, rho_g=audited)
    return fs


def _lipschitz_audit(fs: FeatureSystem, rng: np.random.Generator) -> float:
    """Max difference quotient of the map over sampled pairs, the realized
    grid, and grid-vs-zero pairs, inflated by 5%."""
    dim = fs.d_S + fs.d_A
    xs = _uniform_in_ball(rng, LIPSCHITZ_AUDIT_PAIRS, dim) * np.sqrt(2.0)
    ys = _uniform_in_ball(rng, LIPSCHITZ_AUDIT_PAIRS, dim) * np.sqrt(2.0)
    grid = np.concatenate(
        [np.repeat(fs.psi_s, fs.n_actions, axis=0), np.tile(fs.psi_a, (fs.n_states, 1))], axis=1
    )
    pairs_a = [xs, grid, np.repeat(grid, len(grid), axis=0)]
    pairs_b = [ys, np.zeros_like(grid), np.tile(grid, (len(grid), 1))]
    worst = 0.0
    for a, b in zip(pairs_a, pairs_b):
        gaps = np.linalg.norm(a - b, axis=1)
        keep = gaps > 1e-12
        if not np.any(keep):
            continue
        diffs = np.linalg.norm(fs.map_points(a[keep]) - fs.map_points(b[keep]), axis=1)
        worst = max(worst, float(np.max(diffs / gaps[keep])))
    return LIPSCHITZ_AUDIT_SLACK * worst


def reward_features(fs: FeatureSystem, s: int, a: int) -> np.ndarray:
    """g(psi_s, psi_a) for one grid point; deterministic in (fs, s, a)."""
    s = check_index(s, fs.n_states, "s")
    a = check_index(a, fs.n_actions, "a")
    point = np.concatenate([fs.psi_s[s], fs.psi_a[a]])
    return fs.map_points(point)[0]


def feature_expectation(fs: FeatureSystem, rho) -> np.ndarray:
    """E_rho[g(psi_s, psi_a)] for a distribution rho over state-action pairs.

    `rho` may be flat of length n_states*n_actions or shaped (n_states,
    n_actions). The result is linear in rho.
    """
    rho = np.asarray(rho, dtype=float).reshape(-1)
    check_distribution(rho, "rho", atol=1e-9)
    table = fs.feature_table().reshape(-1, fs.q)
    return rho @ table


def save_features(path: str, fs: FeatureSystem) -> None:
    save_kv(path, {
        "n_states": fs.n_states,
        "n_actions": fs.n_actions,
        "d_S": fs.d_S,
        "d_A": fs.d_A,
        "q": fs.q,
        "psi_s": fs.psi_s,
        "psi_a": fs.psi_a,
        "g_weights": fs.g_weights,
        "g_phase": fs.g_phase,
        "rho_g": fs.rho_g,
    })


def load_features(path: str) -> FeatureSystem:
    kv = load_kv(path)
    n_states = take_int(kv, "n_states", path)
    n_actions = take_int(kv, "n_actions", path)
    d_S = take_int(kv, "d_S", path)
    d_A = take_int(kv, "d_A", path)
    q = take_int(kv, "q", path)
    fs = FeatureSystem(
        d_S=d_S, d_A=d_A, q=q,
        psi_s=take_array(kv, "psi_s", (n_states, d_S), path),
        psi_a=take_array(kv, "psi_a", (n_actions, d_A), path),
        g_weights=take_array(kv, "g_weights", (q, d_S + d_A), path),
        g_phase=take_array(kv, "g_phase", (q,), path),
        rho_g=take_float(kv, "rho_g", path),
    )
    reject_unknown(kv, path)
    return fs
