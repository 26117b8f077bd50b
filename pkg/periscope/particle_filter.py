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
r"""
Particle filter
===============

.. currentmodule:: periscope.particle_filter

Sequential Monte Carlo building blocks shared by object tracking and camera
localization. A posterior is represented by ``K`` weighted states; one filter
step scores every state against the current frame, normalizes the scores,
resamples and diffuses the states with the isotropic random-walk prior

.. math::

    \Delta_t \sim \mathcal{N}(\Delta_{t-1}, r^2 I).

Scores are normalized correlations raised to a power :math:`\eta`,

.. math::

    w = \left(\frac{\langle i, \hat{i}\rangle}{\|i\|_2 \|\hat{i}\|_2}\right)^\eta,

so larger :math:`\eta` sharpens the separation between good and bad hypotheses.

Filter state
------------

.. autosummary::
    ParticleSet
    FilterConfig
    init_uniform
    propagate
    score_dot
    normalize_weights
    residual_resample

Posterior summaries
-------------------

.. autosummary::
    mean_estimate
    covariance
    effective_sample_size
    scott_bandwidth
    kde
    kmeans_modes

Code details
------------
"""
from dataclasses import dataclass, replace

import numpy as np
from sklearn.cluster import KMeans
from sklearn.neighbors import KernelDensity

from ._errors import AllZeroWeights, BoundsDimensionMismatch, ConfigError, InvalidValues, LengthMismatch, TooFewParticles

__all__ = [
    "ParticleSet",
    "FilterConfig",
    "init_uniform",
    "propagate",
    "score_dot",
    "normalize_weights",
    "residual_resample",
    "mean_estimate",
    "covariance",
    "effective_sample_size",
    "scott_bandwidth",
    "kde",
    "kmeans_modes",
]


@dataclass(frozen=True, eq=False)
class ParticleSet:
    """Weighted samples of a ``d``-dimensional posterior.

    Args:
        states (array): shape ``(K, d)``
        weights (array): ``K`` nonnegative weights; defaults to ``1/K`` each
    """

    states: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        states = np.array(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ConfigError("Particle states must be a nonempty (K, d) array.")
        K = states.shape[0]
        weights = np.full(K, 1.0 / K) if self.weights is None else np.array(self.weights, dtype=np.float64)
        if weights.shape != (K,):
            raise LengthMismatch("A particle set needs one weight per state.")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidValues("Particle weights must be finite and nonnegative.")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.states.shape[0]

    @property
    def dim(self):
        """int: state dimension"""
        return self.states.shape[1]


@dataclass(frozen=True)
class FilterConfig:
    """Particle filter parameters.

    Args:
        K (int): number of particles
        r (float): std of the per-frame random walk in meters
        eta (float): score exponent
        bounds (tuple[tuple[float]]): ``(min, max)`` per state axis used by :func:`init_uniform`
        seed (int): master seed
    """

    K: int = 1000
    r: float = 0.05
    eta: float = 4.0
    bounds: tuple = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if self.K < 1:
            raise ConfigError("A filter needs at least one particle.")
        if self.r < 0:
            raise ConfigError("The random-walk radius must be nonnegative.")
        if not self.eta > 0:
            raise ConfigError("The score exponent must be positive.")
        if any(lo > hi for lo, hi in self.bounds):
            raise ConfigError("Every initialization bound needs min <= max.")
        if not self.bounds:
            raise ConfigError("A filter needs at least one initialization interval.")


def init_uniform(cfg, d, rng=None):
    """Draws ``cfg.K`` states uniformly from the box ``cfg.bounds``.

    Args:
        cfg (FilterConfig): filter parameters
        d (int): state dimension
        rng (numpy.random.Generator): random stream; defaults to one seeded with ``cfg.seed``

    Returns:
        ParticleSet: equally weighted particles

    Raises:
        BoundsDimensionMismatch: if ``cfg.bounds`` does not hold ``d`` intervals
    """
    if len(cfg.bounds) != d:
        raise BoundsDimensionMismatch(f"Expected {d} initialization intervals, got {len(cfg.bounds)}.")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    lo, hi = np.array(cfg.bounds).T
    return ParticleSet(rng.uniform(lo, hi, size=(cfg.K, d)))


def propagate(p, r, rng=None, axes=None):
    """Adds independent Gaussian noise of std ``r`` to every coordinate.

    Args:
        p (ParticleSet): particles
        r (float): std in meters
        rng (numpy.random.Generator): random stream
        axes (slice): state coordinates to diffuse; defaults to all of them

    Returns:
        ParticleSet: diffused particles with unchanged weights
    """
    if r < 0:
        raise ConfigError("The random-walk radius must be nonnegative.")
    if r == 0:
        return p
    if rng is None:
        rng = np.random.default_rng()
    if axes is None:
        return replace(p, states=p.states + rng.normal(scale=r, size=p.states.shape))
    states = p.states.copy()
    states[:, axes] += rng.normal(scale=r, size=states[:, axes].shape)
    return replace(p, states=states)


def score_dot(measurement, rendered, eta=4.0):
    r"""Normalized dot product score :math:`(\langle i, \hat{i}\rangle / \|i\| \|\hat{i}\|)^\eta`.

    Args:
        measurement (array): measured values
        rendered (array): rendered values with as many entries as ``measurement``
        eta (float): exponent

    Returns:
        float: the score in :math:`[0, 1]`; zero if either vector vanishes

    Raises:
        LengthMismatch: if the sizes differ
    """
    i = np.ravel(measurement).astype(np.float64)
    j = np.ravel(rendered).astype(np.float64)
    if i.size != j.size:
        raise LengthMismatch(f"Cannot score {j.size} rendered values against {i.size} measured values.")

    norm = np.linalg.norm(i) * np.linalg.norm(j)
    if norm == 0:
        return 0.0
    base = min(max(float(i @ j) / norm, 0.0), 1.0)
    return base**eta


def normalize_weights(p):
    """Rescales the weights to unit sum.

    Raises:
        AllZeroWeights: if every weight is zero
    """
    total = p.weights.sum()
    if not total > 0:
        raise AllZeroWeights("Every particle has zero weight.")
    return replace(p, weights=p.weights / total)


def residual_resample(p, rng=None):
    r"""Residual resampling.

    Particle ``k`` is first copied :math:`\lfloor K w_k \rfloor` times. The remaining
    slots are filled by multinomial draws over the residuals
    :math:`K w_k - \lfloor K w_k \rfloor`.

    Args:
        p (ParticleSet): particles with normalized weights
        rng (numpy.random.Generator): random stream

    Returns:
        ParticleSet: ``K`` particles with weights ``1/K``; deterministic copies come first
    """
    if rng is None:
        rng = np.random.default_rng()
    K = len(p)
    expected = K * p.weights
    copies = np.floor(expected).astype(np.int64)
    indices = np.repeat(np.arange(K), copies)[:K]

    remainder = K - len(indices)
    if remainder > 0:
        residual = np.clip(expected - copies, 0, None)
        if residual.sum() <= 0:
            residual = p.weights
        drawn = rng.choice(K, size=remainder, p=residual / residual.sum())
        indices = np.concatenate([indices, drawn])

    return ParticleSet(p.states[indices])


def mean_estimate(p):
    """Weighted mean of the states."""
    return np.average(p.states, axis=0, weights=p.weights)


def covariance(p):
    """Weighted covariance matrix of the states, shape ``(d, d)``."""
    return np.atleast_2d(np.cov(p.states, rowvar=False, aweights=p.weights, ddof=0))


def effective_sample_size(p):
    r"""Kish's effective sample size :math:`(\sum_k w_k)^2 / \sum_k w_k^2`."""
    w = p.weights
    return float(w.sum() ** 2 / (w @ w))


def scott_bandwidth(p, fallback=1e-3):
    r"""Isotropic bandwidth from Scott's rule.

    .. math::

        h = n_\text{eff}^{-1/(d+4)} \sqrt{\tfrac{1}{d} \operatorname{tr} \Sigma}

    Args:
        p (ParticleSet): particles
        fallback (float): bandwidth returned when all particles coincide

    Returns:
        float: the bandwidth in meters
    """
    spread = np.sqrt(np.trace(covariance(p)) / p.dim)
    if spread <= 0:
        return fallback
    return float(effective_sample_size(p) ** (-1.0 / (p.dim + 4)) * spread)


def kde(p, bandwidth, grid):
    """Isotropic Gaussian kernel density estimate of the particle posterior.

    Args:
        p (ParticleSet): particles
        bandwidth (float): kernel std in meters
        grid (GridSpec): evaluation grid with ``p.dim`` axes

    Returns:
        array: density of shape ``grid.shape``
    """
    if grid.ndim != p.dim:
        raise BoundsDimensionMismatch(f"A {grid.ndim}-axis grid cannot hold a {p.dim}-dimensional density.")
    estimator = KernelDensity(kernel="gaussian", bandwidth=bandwidth)
    estimator.fit(p.states, sample_weight=p.weights)
    return np.exp(estimator.score_samples(grid.points())).reshape(grid.shape)


def kmeans_modes(p, M, dim=None, seed=0):
    """Weighted K-means modes of the posterior.

    Args:
        p (ParticleSet): particles
        M (int): number of clusters
        dim (int): if given, each state is split into ``p.dim // dim`` points of
            dimension ``dim`` before clustering, e.g. ``3`` to pool the positions of all
            objects of a multi-object state
        seed (int): seed of the k-means++ initialization

    Returns:
        list[tuple[array, float]]: cluster means and their weight mass, sorted by mass,
        heaviest first

    Raises:
        TooFewParticles: if there are fewer points than clusters
    """
    points, weights = p.states, p.weights
    if dim is not None:
        per_state = p.dim // dim
        points = points.reshape(-1, dim)
        weights = np.repeat(weights, per_state) / per_state
    if len(points) < M:
        raise TooFewParticles(f"Cannot form {M} clusters from {len(points)} points.")

    km = KMeans(n_clusters=M, n_init=10, max_iter=100, tol=1e-6, random_state=seed)
    labels = km.fit_predict(points, sample_weight=weights)
    mass = np.bincount(labels, weights=weights, minlength=M)
    order = np.argsort(-mass, kind="stable")
    return [(km.cluster_centers_[m], float(mass[m])) for m in order]
