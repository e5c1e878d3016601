"""Input validation helpers.

These mirror the scikit-learn `check_*` idiom: validate, coerce to float64 /
int64 arrays, and raise ValueError naming the offending quantity.
"""

from __future__ import annotations

import numpy as np

PROB_ATOL = 1e-12


def check_distribution(p, name: str, atol: float = PROB_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries (min {p.min()!r})")
    total = float(p.sum())
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, expected 1 within {atol}")
    return p


def check_transition_tensor(P, n_states: int, n_actions: int, atol: float = PROB_ATOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (n_states, n_actions, n_states):
        raise ValueError(
            f"transition tensor must have shape {(n_states, n_actions, n_states)}, got {P.shape}"
        )
    if np.any(P < 0):
        s, a, _ = [int(v) for v in np.argwhere(P < 0)[0]]
        raise ValueError(f"transition row (s={s}, a={a}) has a negative entry")
    sums = P.sum(axis=2)
    bad = np.abs(sums - 1.0) > atol
    if np.any(bad):
        s, a = [int(v) for v in np.argwhere(bad)[0]]  # first violated row
        raise ValueError(
            f"transition row (s={s}, a={a}) sums to {sums[s, a]!r}, expected 1 within {atol}"
        )
    return P


def check_stochastic_matrix(K, name: str, atol: float = PROB_ATOL) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{name} must be square, got shape {K.shape}")
    if np.any(K < 0):
        raise ValueError(f"{name} has negative entries")
    rows = K.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > atol):
        i = int(np.argmax(np.abs(rows - 1.0)))
        raise ValueError(f"{name} row {i} sums to {rows[i]!r}, expected 1 within {atol}")
    return K


def check_index(i, n: int, name: str) -> int:
    i = int(i)
    if not 0 <= i < n:
        raise IndexError(f"{name}={i} out of range [0, {n})")
    return i


def check_state_action_pairs(X, n_states: int, n_actions: int) -> np.ndarray:
    """Validate an (N, 2) integer array of (state, action) pairs."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) array of (state, action) pairs, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty state-action array")
    if not np.issubdtype(X.dtype, np.integer):
        rounded = np.rint(X)
        if not np.allclose(X, rounded):
            raise ValueError("state-action pairs must be integers")
        X = rounded
    X = X.astype(np.int64)
    if X[:, 0].min() < 0 or X[:, 0].max() >= n_states:
        raise ValueError(f"state index out of range [0, {n_states})")
    if X[:, 1].min() < 0 or X[:, 1].max() >= n_actions:
        raise ValueError(f"action index out of range [0, {n_actions})")
    return X


def check_states(states, n_states: int) -> np.ndarray:
    states = np.asarray(states)
    if states.ndim != 1:
        raise ValueError(f"expected a vector of state indices, got shape {states.shape}")
    states = states.astype(np.int64)
    if states.size and (states.min() < 0 or states.max() >= n_states):
        raise ValueError(f"state index out of range [0, {n_states})")
    return states


def check_in_ball(v, radius: float, name: str, atol: float = 1e-9) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v.reshape(-1)))
    if norm > radius + atol:
        from .errors import BallViolation

        raise BallViolation(f"{name} has norm {norm!r}, exceeds radius {radius!r}")
    return v


def check_positive(x, name: str) -> float:
    x = float(x)
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x!r}")
    return x
