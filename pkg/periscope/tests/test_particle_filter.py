# Copyright 2022 Xanadu Quantum Technologies Inc.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Tests for the particle filter building blocks"""
# pylint: disable=no-self-use
import pytest
import numpy as np

from periscope._errors import (
    AllZeroWeights,
    BoundsDimensionMismatch,
    ConfigError,
    InvalidValues,
    LengthMismatch,
    TooFewParticles,
)
from periscope.lct import GridSpec
from periscope.particle_filter import (
    FilterConfig,
    ParticleSet,
    covariance,
    effective_sample_size,
    init_uniform,
    kde,
    kmeans_modes,
    mean_estimate,
    normalize_weights,
    propagate,
    residual_resample,
    scott_bandwidth,
    score_dot,
)


class TestParticleSet:
    """Tests for the particle container and filter configuration"""

    def test_default_weights(self):
        """Test that weights default to uniform"""
        p = ParticleSet(np.zeros((4, 3)))
        assert np.allclose(p.weights, 0.25)
        assert len(p) == 4
        assert p.dim == 3

    def test_weight_count(self):
        """Test that one weight per state is required"""
        with pytest.raises(LengthMismatch):
            ParticleSet(np.zeros((4, 3)), np.ones(3))

    def test_negative_weights(self):
        """Test that negative weights are rejected"""
        with pytest.raises(InvalidValues, match="nonnegative"):
            ParticleSet(np.zeros((2, 3)), [1.0, -1.0])

    def test_empty(self):
        """Test that empty sets are rejected"""
        with pytest.raises(ConfigError):
            ParticleSet(np.zeros((0, 3)))

    @pytest.mark.parametrize(
        "kwargs", [{"K": 0}, {"r": -0.1}, {"eta": 0.0}, {"bounds": ((1.0, 0.0),)}, {"bounds": ()}]
    )
    def test_invalid_config(self, kwargs):
        """Test that invalid filter parameters are rejected"""
        with pytest.raises(ConfigError):
            FilterConfig(**kwargs)


class TestInitUniform:
    """Tests for uniform initialization"""

    def test_degenerate_bounds(self):
        """Test that zero-width bounds place every particle at one point"""
        cfg = FilterConfig(K=10, bounds=((0.5, 0.5), (-1.0, -1.0), (2.0, 2.0)))
        p = init_uniform(cfg, 3)
        assert np.allclose(p.states, [0.5, -1.0, 2.0])

    def test_seed(self):
        """Test that equal seeds give equal particles"""
        cfg = FilterConfig(K=50, bounds=((0, 1), (0, 1)), seed=5)
        assert np.array_equal(init_uniform(cfg, 2).states, init_uniform(cfg, 2).states)

    def test_moments(self):
        """Test the empirical mean of many draws"""
        K = 100000
        cfg = FilterConfig(K=K, bounds=((-1.0, 1.0), (0.0, 4.0)), seed=1)
        p = init_uniform(cfg, 2)
        ranges = np.array([2.0, 4.0])
        assert np.all(np.abs(p.states.mean(axis=0) - [0.0, 2.0]) < 3 * ranges / np.sqrt(12 * K))
        assert np.all(p.states >= [-1.0, 0.0]) and np.all(p.states <= [1.0, 4.0])

    def test_dimension_mismatch(self):
        """Test that the bounds must match the state dimension"""
        with pytest.raises(BoundsDimensionMismatch):
            init_uniform(FilterConfig(K=10, bounds=((0, 1),)), 3)


class TestPropagate:
    """Tests for the random-walk motion model"""

    def test_zero_radius(self):
        """Test that r = 0 leaves the states unchanged"""
        p = ParticleSet(np.random.random((5, 3)))
        assert np.array_equal(propagate(p, 0.0).states, p.states)

    def test_std(self):
        """Test the empirical step size"""
        p = ParticleSet(np.zeros((100000, 3)))
        q = propagate(p, 0.05, np.random.default_rng(2))
        assert np.allclose(q.states.std(axis=0), 0.05, rtol=0.01)
        assert np.array_equal(q.weights, p.weights)

    def test_negative_radius(self):
        """Test that a negative radius is rejected"""
        with pytest.raises(ConfigError):
            propagate(ParticleSet(np.zeros((2, 3))), -1.0)


class TestScoreDot:
    """Tests for the normalized dot product score"""

    @pytest.mark.parametrize("eta", [1.0, 4.0, 10.0])
    def test_aligned(self, eta):
        """Test that a measurement scores one against itself"""
        i = np.random.random(20) + 0.1
        assert np.isclose(score_dot(i, 3 * i, eta), 1.0)

    def test_orthogonal(self):
        """Test that disjoint supports score zero"""
        assert score_dot([1.0, 0.0], [0.0, 1.0]) == 0.0

    @pytest.mark.parametrize("eta, expected", [(1.0, 1 / np.sqrt(2)), (4.0, 0.25)])
    def test_value(self, eta, expected):
        """Test the score of i = [1, 0] against [1, 1]"""
        assert np.isclose(score_dot([1.0, 0.0], [1.0, 1.0], eta), expected)

    def test_negative_clamped(self):
        """Test that anti-correlated vectors score zero"""
        assert score_dot([1.0, 0.0], [-1.0, 0.0], 1.0) == 0.0

    def test_zero_vector(self):
        """Test that a zero rendering scores zero"""
        assert score_dot([1.0, 2.0], [0.0, 0.0]) == 0.0

    def test_length_mismatch(self):
        """Test that the sizes must agree"""
        with pytest.raises(LengthMismatch):
            score_dot(np.ones(3), np.ones(4))


class TestResample:
    """Tests for weight normalization and residual resampling"""

    def test_normalize(self):
        """Test unit-sum normalization"""
        p = normalize_weights(ParticleSet(np.zeros((3, 1)), [1.0, 2.0, 1.0]))
        assert np.allclose(p.weights, [0.25, 0.5, 0.25])

    def test_all_zero(self):
        """Test that all-zero weights cannot be normalized"""
        with pytest.raises(AllZeroWeights):
            normalize_weights(ParticleSet(np.zeros((3, 1)), np.zeros(3)))

    @pytest.mark.parametrize("K", [1, 7, 10, 1000])
    def test_uniform_weights(self, K):
        """Test that uniform weights reproduce the input exactly"""
        states = np.random.random((K, 2))
        q = residual_resample(ParticleSet(states), np.random.default_rng(0))
        assert np.array_equal(q.states, states)

    @pytest.mark.parametrize(
        "weights, counts", [([0.5, 0.5, 0, 0], [2, 2, 0, 0]), ([0.6, 0.4, 0, 0, 0], [3, 2, 0, 0, 0])]
    )
    def test_integer_counts(self, weights, counts):
        """Test the deterministic copies for integral expected counts"""
        K = len(weights)
        states = np.arange(K, dtype=np.float64)[:, None]
        q = residual_resample(ParticleSet(states, weights), np.random.default_rng(0))
        assert np.array_equal(np.bincount(q.states[:, 0].astype(int), minlength=K), counts)
        assert np.allclose(q.weights, 1 / K)

    def test_exact_floor(self):
        """Test that an expected count just below one gives no deterministic copy"""
        states = np.arange(2, dtype=np.float64)[:, None]
        q = residual_resample(ParticleSet(states, [0.5 - 1e-10, 0.5 + 1e-10]), np.random.default_rng(0))
        # the single deterministic copy comes first
        assert q.states[0, 0] == 1
        assert len(q) == 2

    def test_residual_draws(self):
        """Test that the fractional remainder is filled from the residuals only"""
        states = np.arange(3, dtype=np.float64)[:, None]
        q = residual_resample(ParticleSet(states, [0.5, 0.3, 0.2]), np.random.default_rng(4))
        counts = np.bincount(q.states[:, 0].astype(int), minlength=3)
        # one deterministic copy of particle 0, two residual draws among all three
        assert len(q) == 3
        assert counts[0] >= 1

    def test_unbiased(self):
        """Test that the expected copy counts equal K times the weights"""
        weights = np.array([0.45, 0.3, 0.15, 0.1])
        states = np.arange(4, dtype=np.float64)[:, None]
        rng = np.random.default_rng(9)
        total = np.zeros(4)
        for _ in range(5000):
            q = residual_resample(ParticleSet(states, weights), rng)
            total += np.bincount(q.states[:, 0].astype(int), minlength=4)
        assert np.allclose(total / 5000, 4 * weights, atol=0.05)


class TestSummaries:
    """Tests for posterior summaries"""

    def test_mean(self):
        """Test the weighted mean"""
        states = np.random.normal(size=(100, 3))
        weights = np.random.random(100)
        p = ParticleSet(states, weights / weights.sum())
        expected = (states * p.weights[:, None]).sum(axis=0) / p.weights.sum()
        assert np.allclose(mean_estimate(p), expected, atol=1e-12, rtol=0)
        assert np.allclose(mean_estimate(ParticleSet([[1.0], [-1.0]])), 0)

    def test_covariance(self):
        """Test the weighted covariance of two particles"""
        p = ParticleSet([[1.0, 0.0], [-1.0, 0.0]])
        assert np.allclose(covariance(p), [[1.0, 0.0], [0.0, 0.0]])

    def test_effective_sample_size(self):
        """Test the two extreme cases of the effective sample size"""
        assert np.isclose(effective_sample_size(ParticleSet(np.zeros((8, 1)))), 8)
        assert np.isclose(effective_sample_size(ParticleSet(np.zeros((8, 1)), np.eye(8)[2])), 1)

    def test_scott_bandwidth(self):
        """Test Scott's rule and its fallback"""
        assert np.isclose(scott_bandwidth(ParticleSet([[1.0], [-1.0]])), 2 ** (-1 / 5))
        assert scott_bandwidth(ParticleSet(np.ones((5, 2))), fallback=0.01) == 0.01

    def test_kde_normalized(self):
        """Test that the density integrates to one"""
        grid = GridSpec(((-0.5, 0.5), (-0.5, 0.5)), (101, 101))
        density = kde(ParticleSet([[0.0, 0.0]]), 0.1, grid)
        assert np.isclose(density.sum() * grid.cell_volume, 1.0, rtol=0.02)
        assert np.unravel_index(np.argmax(density), density.shape) == (50, 50)

    def test_kde_bimodal(self):
        """Test that two distant particles give two equal bumps"""
        grid = GridSpec(((-1.0, 1.0), (-0.5, 0.5)), (201, 101))
        density = kde(ParticleSet([[-0.5, 0.0], [0.5, 0.0]]), 0.1, grid)
        left = density[:100].sum()
        right = density[101:].sum()
        assert np.isclose(left, right, rtol=1e-6)
        assert np.isclose(density[50, 50], density[150, 50])

    def test_kde_dimension(self):
        """Test that the grid must match the state dimension"""
        with pytest.raises(BoundsDimensionMismatch):
            kde(ParticleSet(np.zeros((2, 3))), 0.1, GridSpec(((0, 1), (0, 1)), (2, 2)))

    def test_kmeans_blobs(self):
        """Test that two blobs are found with the heavier first"""
        rng = np.random.default_rng(0)
        a = rng.normal([0.0, 0.0, 1.0], 0.01, size=(300, 3))
        b = rng.normal([1.0, 1.0, 1.0], 0.01, size=(100, 3))
        modes = kmeans_modes(ParticleSet(np.concatenate([a, b])), 2)
        assert np.allclose(modes[0][0], [0, 0, 1.0], atol=0.05)
        assert np.allclose(modes[1][0], [1.0, 1.0, 1.0], atol=0.05)
        assert np.isclose(modes[0][1], 0.75)

    def test_kmeans_single(self):
        """Test that a single cluster is the weighted mean"""
        states = np.random.normal(size=(50, 3))
        weights = np.random.random(50)
        p = ParticleSet(states, weights / weights.sum())
        (center, mass), = kmeans_modes(p, 1)
        assert np.allclose(center, mean_estimate(p))
        assert np.isclose(mass, 1.0)

    def test_kmeans_pooled(self):
        """Test clustering the pooled objects of two-object states"""
        rng = np.random.default_rng(1)
        first = rng.normal([0.0, 0.0, 1.0], 0.01, size=(100, 3))
        second = rng.normal([0.5, 0.0, 1.0], 0.01, size=(100, 3))
        p = ParticleSet(np.hstack([first, second]))
        modes = kmeans_modes(p, 2, dim=3)
        centers = sorted(m[0][0] for m in modes)
        assert np.allclose(centers, [0.0, 0.5], atol=0.02)
        assert np.isclose(sum(m[1] for m in modes), 1.0)

    def test_kmeans_too_few(self):
        """Test that M may not exceed the particle count"""
        with pytest.raises(TooFewParticles):
            kmeans_modes(ParticleSet(np.zeros((2, 3))), 3)
