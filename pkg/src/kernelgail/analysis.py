"""Reward-ball distances between policies, independent-block machinery for
dependent data, complexity measures, and the generalization-bound evaluator.

For the reward class {theta . g : ||theta||_2 <= kappa} the worst-case
average-reward gap between two policies has a closed form: the supremum of a
linear functional over a Euclidean ball, kappa * ||G(pi) - G(pi')||_2, where
G is the stationary feature expectation. The class is symmetric (negating
theta stays in the ball), so this is a pseudometric.

Block construction: a length-T stretch is partitioned into 2m blocks of
equal size b, alternating between the odd-indexed and even-indexed
subsequences; b grows logarithmically in T at a rate set by the dependence
decay (beta0, beta1, alpha). The bound evaluator plugs the chosen b into the
explicit finite-sample display

    32 b / T + 48 B_r / sqrt(T/2b) * sqrt(log N(1/sqrt(T/2b)))
    + 12 B_r sqrt(log(4/delta') / (T/b)) + eps_opt,  delta' = delta/2,

with T replaced by the concatenated length nT for multi-trajectory data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TrajectoryTooShort
from .features import FeatureSystem, feature_expectation
from .mdp import PolicyChain, TabularMDP
from .sampling import TrajectoryBatch, empirical_feature_expectation, rollout, substream

STREAM_SIGMA = 7
STREAM_GAP = 8


def exact_r_distance(fs: FeatureSystem, chain_a: PolicyChain, chain_b: PolicyChain,
                     kappa: float) -> float:
    """Worst-case reward gap over the kappa ball: kappa * ||G(a) - G(b)||."""
    ga = feature_expectation(fs, chain_a.stationary)
    gb = feature_expectation(fs, chain_b.stationary)
    return kappa * float(np.linalg.norm(ga - gb))


def empirical_r_distance(fs: FeatureSystem, batch: TrajectoryBatch, chain: PolicyChain,
                         kappa: float) -> float:
    """Same closed form with the first argument replaced by a sample average."""
    emp = empirical_feature_expectation(batch, fs)
    g = feature_expectation(fs, chain.stationary)
    return kappa * float(np.linalg.norm(emp - g))


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Alternating equal-size blocks tiling [0, 2*b*m)."""

    block_size: int
    m: int
    odd_blocks: np.ndarray  # (m, b) indices
    even_blocks: np.ndarray  # (m, b) indices
    zeta: float

    def __post_init__(self):
        self.odd_blocks.setflags(write=False)
        self.even_blocks.setflags(write=False)


def make_blocks(T: int, delta: float, beta0: float, beta1: float, alpha: float) -> BlockPartition:
    """Choose the block size b = ceil((log(4 beta0 T / delta) / beta1)^(1/alpha))
    and tile the trajectory with m = floor(T / 2b) alternating block pairs.

    Raises TrajectoryTooShort (carrying the minimal admissible T) when even a
    single block pair does not fit.
    """
    if T < 1 or delta <= 0 or beta0 <= 0 or beta1 <= 0 or alpha <= 0:
        raise ValueError("T, delta, beta0, beta1, alpha must all be positive")
    arg = 4.0 * beta0 * T / delta
    b = max(1, math.ceil((math.log(arg) / beta1) ** (1.0 / alpha))) if arg > 1.0 else 1
    m = T // (2 * b)
    if m < 1:
        raise TrajectoryTooShort(
            f"T={T} cannot hold one block pair of size b={b}; need T >= {2 * b}",
            min_length=2 * b,
        )
    zeta_arg = beta0 * T / delta
    zeta = (math.log(zeta_arg) / beta1) ** (1.0 / alpha) if zeta_arg > 1.0 else 0.0
    base = np.arange(b)
    starts = 2 * b * np.arange(m)
    odd = starts[:, None] + base[None, :]
    even = odd + b
    return BlockPartition(block_size=b, m=m, odd_blocks=odd, even_blocks=even, zeta=zeta)


def kernel_rademacher(
    fs: FeatureSystem,
    block_heads: np.ndarray,
    B_theta: float,
    n_sigma: int,
    seed: int,
) -> tuple[float, float]:
    """Empirical Rademacher complexity of the reward ball on block heads.

    For the ball class the sign-weighted supremum is
    (B_theta / m) ||sum_t sigma_t g(x_t)||_2; this averages that closed form
    over `n_sigma` independent sign draws and returns (mean, standard error).
    """
    heads = np.asarray(block_heads, dtype=np.int64)
    if heads.ndim != 2 or heads.shape[1] != 2 or heads.shape[0] < 1:
        raise ValueError("block_heads must be an (m, 2) array of state-action pairs")
    m = heads.shape[0]
    g = fs.feature_table()[heads[:, 0], heads[:, 1]]  # (m, q)
    rng = substream(seed, STREAM_SIGMA)
    sigma = rng.integers(0, 2, size=(n_sigma, m)) * 2 - 1
    values = B_theta / m * np.linalg.norm(sigma.astype(float) @ g, axis=1)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(n_sigma)) if n_sigma > 1 else 0.0
    return mean, stderr


def covering_bound_kernel(B_theta: float, rho_g: float, q: int, eps: float) -> float:
    """log covering number of the reward ball at sup-norm resolution eps:
    q * log(1 + 2 sqrt(2) rho_g B_theta / eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return q * math.log1p(2.0 * math.sqrt(2.0) * rho_g * B_theta / eps)


def covering_bound_nn(d: int, D: int, eps: float) -> float:
    """log covering number of depth-D width-d spectral-norm-1 rectified
    networks: d^2 D log(1 + sqrt(2) D sqrt(d) / eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d < 1 or D < 1:
        raise ValueError("d and D must be >= 1")
    return d * d * D * math.log1p(math.sqrt(2.0) * D * math.sqrt(d) / eps)


def theorem1_bound(
    B_r: float,
    log_covering_fn,
    n: int,
    T: int,
    delta: float,
    beta0: float,
    beta1: float,
    alpha: float,
    epsilon_opt: float = 0.0,
) -> tuple[float, BlockPartition]:
    """Explicit finite-sample bound on the population-vs-empirical distance
    gap, evaluated at the concatenated trajectory length nT.

    `log_covering_fn(eps)` supplies the log covering number of the reward
    class at resolution eps. Returns (bound, block partition).
    """
    total = n * T
    part = make_blocks(total, delta, beta0, beta1, alpha)
    m = part.m
    log_cov = log_covering_fn(1.0 / math.sqrt(m))
    delta_prime = delta / 2.0
    bound = (
        32.0 * part.block_size / total
        + 48.0 * B_r / math.sqrt(m) * math.sqrt(max(log_cov, 0.0))
        + 12.0 * B_r * math.sqrt(math.log(4.0 / delta_prime) / (2.0 * m))
        + epsilon_opt
    )
    return float(bound), part


@dataclass(frozen=True, eq=False)
class GapRow:
    nT: int
    seed: int
    gap: float
    empirical_d: float
    exact_d: float


@dataclass(frozen=True, eq=False)
class GapExperiment:
    rows: list[GapRow]
    medians: dict[int, float]
    slope: float


def generalization_gap_experiment(
    mdp: TabularMDP,
    fs: FeatureSystem,
    expert_chain: PolicyChain,
    expert_policy,
    learned_chain: PolicyChain,
    kappa: float,
    nT_grid: list[int],
    seeds: list[int],
    burn_in: int = 200,
) -> GapExperiment:
    """Measure |empirical - exact| distance gaps across sample sizes.

    For each (nT, seed) one expert trajectory of length nT (after burn-in) is
    drawn, the empirical distance to the learned policy is compared to the
    exact one, and the log-log slope of the per-nT median gap is fitted.
    """
    if not nT_grid or not seeds:
        raise ValueError("nT_grid and seeds must be non-empty")
    exact_d = exact_r_distance(fs, expert_chain, learned_chain, kappa)
    rows: list[GapRow] = []
    for nT in nT_grid:
        for seed in seeds:
            batch = rollout(mdp, expert_policy, 1, nT, seed, burn_in=burn_in)
            emp = empirical_r_distance(fs, batch, learned_chain, kappa)
            rows.append(GapRow(nT=nT, seed=seed, gap=abs(emp - exact_d),
                               empirical_d=emp, exact_d=exact_d))
    medians = {nT: float(np.median([r.gap for r in rows if r.nT == nT])) for nT in nT_grid}
    xs = np.log(np.array(sorted(medians), dtype=float))
    ys = np.log(np.array([max(medians[nT], 1e-300) for nT in sorted(medians)]))
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(xs) > 1 else float("nan")
    return GapExperiment(rows=rows, medians=medians, slope=slope)
