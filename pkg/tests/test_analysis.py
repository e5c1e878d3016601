"""Reward-ball distances, blocks, Rademacher sums, and bound calculators."""

import math

import numpy as np
import pytest

import kernelgail as kg
from kernelgail.errors import TrajectoryTooShort

from conftest import KAPPA


def sphere_sample_distance(fs, chain_a, chain_b, kappa, n, seed):
    """Brute-force oracle: max over uniformly sampled theta on the sphere."""
    ga = kg.feature_expectation(fs, chain_a.stationary)
    gb = kg.feature_expectation(fs, chain_b.stationary)
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, fs.q))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return float(np.max(pts @ (ga - gb))) * kappa, ga - gb


class TestExactDistance:
    def test_identical_policies(self, mdp5, fs16, expert_chain):
        assert kg.exact_r_distance(fs16, expert_chain, expert_chain, KAPPA) == 0.0

    def test_symmetry(self, mdp5, fs16, expert_chain):
        other = kg.induced_chain(mdp5, kg.uniform_policy(fs16))
        d1 = kg.exact_r_distance(fs16, expert_chain, other, KAPPA)
        d2 = kg.exact_r_distance(fs16, other, expert_chain, KAPPA)
        assert d1 == d2 > 0

    def test_dominates_sphere_samples(self, mdp5, fs4):
        a = kg.induced_chain(mdp5, kg.uniform_policy(fs4))
        b = kg.induced_chain(mdp5, kg.make_policy(
            fs4, np.random.default_rng(2).standard_normal((3, 5)) * 2))
        closed = kg.exact_r_distance(fs4, a, b, KAPPA)
        sampled, _ = sphere_sample_distance(fs4, a, b, KAPPA, 100_000, seed=3)
        assert sampled <= closed + 1e-12
        assert closed - sampled <= 1e-2 * closed

    def test_pseudometric_on_random_triples(self, mdp5, fs16):
        rng = np.random.default_rng(4)
        chains = [kg.induced_chain(mdp5, kg.make_policy(fs16, rng.standard_normal((3, 5))))
                  for _ in range(6)]
        for i in range(6):
            for j in range(6):
                dij = kg.exact_r_distance(fs16, chains[i], chains[j], KAPPA)
                dji = kg.exact_r_distance(fs16, chains[j], chains[i], KAPPA)
                assert dij >= 0
                assert abs(dij - dji) <= 1e-10
                for k in range(6):
                    dik = kg.exact_r_distance(fs16, chains[i], chains[k], KAPPA)
                    dkj = kg.exact_r_distance(fs16, chains[k], chains[j], KAPPA)
                    assert dij <= dik + dkj + 1e-10


class TestEmpiricalDistance:
    def test_self_batch_vanishes_with_samples(self, mdp5, fs16, expert, expert_chain):
        batch = kg.rollout(mdp5, expert, n=1, T=100_000, seed=6, burn_in=200)
        assert kg.empirical_r_distance(fs16, batch, expert_chain, KAPPA) <= 0.05

    def test_point_mass_chain_and_batch(self):
        mdp = kg.TabularMDP(1, 1, np.ones((1, 1, 1)), np.ones(1))
        fs = kg.build_features(mdp, d_S=1, d_A=1, q=3, bandwidth=1.0, seed=1)
        chain = kg.induced_chain(mdp, kg.uniform_policy(fs))
        batch = kg.TrajectoryBatch(states=np.zeros((1, 4), dtype=np.int64),
                                   actions=np.zeros((1, 4), dtype=np.int64))
        assert kg.empirical_r_distance(fs, batch, chain, KAPPA) <= 1e-12

    def test_gap_shrinks_with_sample_size(self, mdp5, fs16, expert, expert_chain):
        learned = kg.induced_chain(mdp5, kg.uniform_policy(fs16))
        exp = kg.generalization_gap_experiment(
            mdp5, fs16, expert_chain, expert, learned, KAPPA,
            [1000, 10000, 100000], list(range(20)), burn_in=200)
        meds = [exp.medians[n] for n in (1000, 10000, 100000)]
        assert meds[0] > meds[1] > meds[2]


class TestBlocks:
    def test_hand_checked_block_size(self):
        # beta0 = beta1 = alpha = 1 and delta = 4/T make b = ceil(log T^2).
        T = 5000
        part = kg.make_blocks(T, delta=4.0 / T, beta0=1.0, beta1=1.0, alpha=1.0)
        assert part.block_size == math.ceil(math.log(T**2))
        assert part.zeta == (math.log(1.0 * T / (4.0 / T))) ** 1.0

    def test_blocks_tile_without_overlap(self):
        for T, delta in [(64, 0.5), (1000, 0.05), (12345, 0.01)]:
            part = kg.make_blocks(T, delta, beta0=1.0, beta1=0.7, alpha=1.0)
            indices = np.concatenate([part.odd_blocks.reshape(-1),
                                      part.even_blocks.reshape(-1)])
            assert len(np.unique(indices)) == len(indices)
            assert indices.min() == 0
            assert indices.max() == 2 * part.block_size * part.m - 1
            assert 2 * part.block_size * part.m <= T
            assert part.odd_blocks.shape == part.even_blocks.shape == (part.m, part.block_size)

    def test_doubling_T_grows_blocks_logarithmically(self):
        beta1 = 0.7
        for T in (1000, 5000, 20000):
            b1 = kg.make_blocks(T, 0.05, 1.0, beta1, 1.0).block_size
            b2 = kg.make_blocks(2 * T, 0.05, 1.0, beta1, 1.0).block_size
            assert b2 - b1 <= 1 + math.log(2) / beta1

    def test_too_short_trajectory(self):
        with pytest.raises(TrajectoryTooShort) as err:
            kg.make_blocks(4, delta=1e-12, beta0=1.0, beta1=0.5, alpha=1.0)
        assert err.value.min_length is not None and err.value.min_length > 4


class TestKernelRademacher:
    def test_zero_features(self, mdp5):
        fs = kg.build_features(mdp5, d_S=2, d_A=2, q=4, bandwidth=1.0, seed=2,
                               pin_zero_pair=(0, 0))
        heads = np.zeros((8, 2), dtype=np.int64)  # every head is the pinned pair
        mean, se = kg.kernel_rademacher(fs, heads, B_theta=1.0, n_sigma=64, seed=1)
        assert mean == 0.0

    def test_single_head_sign_invariant(self, fs16):
        heads = np.array([[2, 1]])
        mean, se = kg.kernel_rademacher(fs16, heads, B_theta=1.5, n_sigma=32, seed=2)
        expected = 1.5 * np.linalg.norm(kg.reward_features(fs16, 2, 1))
        assert abs(mean - expected) < 1e-12
        assert se <= 1e-12

    def test_matches_sphere_sampling(self, mdp5, fs4):
        rng = np.random.default_rng(5)
        heads = np.stack([rng.integers(0, 5, 12), rng.integers(0, 3, 12)], axis=1)
        g = fs4.feature_table()[heads[:, 0], heads[:, 1]]
        m = len(heads)
        sub = np.random.default_rng(7)
        sigma = sub.integers(0, 2, size=(200, m)) * 2 - 1
        pts = sub.standard_normal((100_000, fs4.q))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        brute = np.mean([np.max(pts @ (s @ g)) / m for s in sigma.astype(float)])
        closed = np.mean([np.linalg.norm(s @ g) / m for s in sigma.astype(float)])
        assert abs(brute - closed) <= 1e-2 * closed


class TestCoveringBounds:
    def test_kernel_limits(self):
        assert kg.covering_bound_kernel(1.0, 1.0, 4, 1e12) <= 1e-9
        assert abs(kg.covering_bound_kernel(1.0, 1.0, 4, 1.0)
                   - 2 * kg.covering_bound_kernel(1.0, 1.0, 2, 1.0)) < 1e-12
        assert abs(kg.covering_bound_kernel(1.0, 1.0, 2, 1.0)
                   - 2 * math.log(1 + 2 * math.sqrt(2))) < 1e-12

    def test_nn_limits(self):
        assert kg.covering_bound_nn(1, 1, 1e12) <= 1e-9
        assert abs(kg.covering_bound_nn(1, 1, math.sqrt(2)) - math.log(2)) < 1e-12

    def test_nn_matches_independent_formula(self):
        for d, D, eps in [(3, 2, 0.5), (8, 4, 0.1), (2, 1, 1.0)]:
            independent = d**2 * D * math.log(1 + math.sqrt(2) * D * math.sqrt(d) / eps)
            assert abs(kg.covering_bound_nn(d, D, eps) - independent) < 1e-12

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError):
            kg.covering_bound_kernel(1.0, 1.0, 2, 0.0)


class TestTheorem1Bound:
    @staticmethod
    def kernel_cov(eps):
        return kg.covering_bound_kernel(1.0, 1.0, 16, eps)

    def test_monotone_decreasing_in_samples(self):
        values = [kg.theorem1_bound(1.0, self.kernel_cov, 1, T, 0.05, 1.0, 0.5, 1.0)[0]
                  for T in (10**3, 10**4, 10**5, 10**6)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_monotone_increasing_in_reward_bound(self):
        small = kg.theorem1_bound(0.5, self.kernel_cov, 1, 10**4, 0.05, 1.0, 0.5, 1.0)[0]
        large = kg.theorem1_bound(2.0, self.kernel_cov, 1, 10**4, 0.05, 1.0, 0.5, 1.0)[0]
        assert large > small

    def test_hand_substitution(self):
        # Evaluate every term independently for one parameter point.
        B_r, n, T, delta, beta0, beta1 = 1.0, 1, 10**6, 0.05, 1.0, 0.5
        bound, part = kg.theorem1_bound(B_r, self.kernel_cov, n, T, delta,
                                        beta0, beta1, 1.0, epsilon_opt=0.0)
        b = math.ceil(math.log(4 * beta0 * T / delta) / beta1)
        m = T // (2 * b)
        expected = (32 * b / T
                    + 48 * B_r / math.sqrt(m) * math.sqrt(self.kernel_cov(1 / math.sqrt(m)))
                    + 12 * B_r * math.sqrt(math.log(4 / (delta / 2)) / (2 * m)))
        assert part.block_size == b and part.m == m
        assert abs(bound - expected) < 1e-12

    def test_optimization_slack_added(self):
        base = kg.theorem1_bound(1.0, self.kernel_cov, 1, 10**4, 0.05, 1.0, 0.5, 1.0)[0]
        shifted = kg.theorem1_bound(1.0, self.kernel_cov, 1, 10**4, 0.05, 1.0, 0.5, 1.0,
                                    epsilon_opt=0.25)[0]
        assert abs(shifted - base - 0.25) < 1e-12
