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
Object tracking
===============

.. currentmodule:: periscope.tracking

Particle-filter tracking of ``M`` hidden objects of known shape seen from a
camera of known pose. A particle holds the centroid positions of all objects,
a ``3M``-vector in world coordinates. Every frame is light-cone transformed
onto the :math:`v` grid of the objects' STIRs, each particle is rendered by STIR
lookup and scored, and the particles are resampled and diffused.

With several objects the rendering of a particle is the superposition

.. math::

    \hat{i} = \sum_m w^{(m)} \hat{i}^{(m)}, \qquad
    w^{(m)} = \max\left(0, \frac{\langle \hat{i}^{(m)}, i\rangle}{\|\hat{i}^{(m)}\|_2 \|i\|_2}\right).

Several objects are moved one at a time: object slot ``m`` of every particle is
diffused, and the whole set is scored and resampled before slot ``m + 1`` moves,
so each selection acts on three coordinates. Objects that share a STIR are
interchangeable; after scoring, the slots of every particle are reordered to
match the previous estimate, so a slot keeps following the same object. The
estimate is the heaviest k-means cluster of the joint states, refined per object
by the weighted mean of the slot positions within a window around it.

.. autosummary::
    TrackConfig
    TrackResult
    transform_measurement
    render_multi
    exchangeable_groups
    align_slots
    track

Code details
------------
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._errors import AllZeroWeights, BoundsDimensionMismatch, ConfigError
from .lct import GridSpec, resample_time
from .particle_filter import (
    FilterConfig,
    ParticleSet,
    effective_sample_size,
    init_uniform,
    kmeans_modes,
    mean_estimate,
    normalize_weights,
    propagate,
    residual_resample,
)
from .stir import render_mas, score_particles

__all__ = [
    "TrackConfig",
    "TrackResult",
    "transform_measurement",
    "render_multi",
    "exchangeable_groups",
    "align_slots",
    "track",
]

logger = logging.getLogger(__name__)

ESTIMATORS = ("mean", "kmeans")


@dataclass(frozen=True)
class TrackConfig:
    """Tracking parameters.

    Args:
        filter (FilterConfig): particle filter parameters; ``bounds`` holds either three
            intervals shared by all objects or ``3M`` intervals
        stirs (tuple[CanonicalSTIR]): one STIR per object, on a common grid
        estimator (str): ``"mean"`` or ``"kmeans"``; several objects need ``"kmeans"``
        skip (int): leading frames left out of the estimates while the filter localizes
        modes (int): clusters searched by the ``"kmeans"`` estimator
        workers (int): threads used for particle scoring
        partitioned (bool): move and resample several objects one at a time
        window (float): radius in meters of the window that refines a k-means mode;
            defaults to twice the random-walk radius
    """

    filter: FilterConfig
    stirs: tuple
    estimator: str = "mean"
    skip: int = 5
    modes: int = 3
    workers: int = 1
    partitioned: bool = True
    window: float = None

    def __post_init__(self):
        object.__setattr__(self, "stirs", tuple(self.stirs))
        if not self.stirs:
            raise ConfigError("Tracking needs at least one object STIR.")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"Unknown estimator {self.estimator!r}; use one of {ESTIMATORS}.")
        if len(self.stirs) > 1 and self.estimator != "kmeans":
            raise ConfigError("Tracking several objects requires the kmeans estimator.")
        if self.skip < 0:
            raise ConfigError("The number of skipped frames must be nonnegative.")
        if self.modes < 1:
            raise ConfigError("The kmeans estimator needs at least one cluster.")
        if self.window is not None and self.window < 0:
            raise ConfigError("The mode window must be nonnegative.")
        if len(self.filter.bounds) not in (3, 3 * len(self.stirs)):
            raise BoundsDimensionMismatch("Tracking bounds need 3 or 3M intervals.")

    @property
    def n_objects(self):
        """int: number of tracked objects"""
        return len(self.stirs)

    @property
    def mode_window(self):
        """float: radius of the window around a k-means mode"""
        return 2 * self.filter.r if self.window is None else self.window

    def state_bounds(self):
        """Initialization intervals for the full ``3M``-dimensional state."""
        bounds = self.filter.bounds
        if len(bounds) == 3:
            bounds = bounds * self.n_objects
        return bounds


@dataclass(eq=False)
class TrackResult:
    """Output of :func:`track`.

    Args:
        snapshots (list[ParticleSet]): normalized posterior of every frame, before resampling
        estimates (array): object positions of shape ``(T - skip, M, 3)``
        object_weights (array): per-object superposition weights of the estimate,
            shape ``(T - skip, M)``
        frames (array): frame indices of the estimates
        ess (array): effective sample size of every frame
        degenerate (list[int]): frames on which every particle scored zero
    """

    snapshots: list
    estimates: np.ndarray
    object_weights: np.ndarray
    frames: np.ndarray
    ess: np.ndarray
    degenerate: list = field(default_factory=list)

    def trajectory(self, m=0):
        """Estimated trajectory of object ``m``, shape ``(T - skip, 3)``."""
        return self.estimates[:, m]


def transform_measurement(frame, camera, stir_grid):
    r"""Light-cone transforms one frame onto the :math:`v` axis of a STIR grid.

    Nodes beyond the last temporal bin read as zero. The amplitude exponent follows
    the camera falloff, so a point scatterer carries the same mass at every range.

    Args:
        frame (FrameMeasurement): the frame
        camera (CameraModel): the camera that captured it
        stir_grid (GridSpec): grid whose third axis is the target :math:`v` axis

    Returns:
        array: shape ``(n_x, n_y, n_v)``
    """
    n_x, n_y, _ = np.shape(frame.histogram)
    target = GridSpec(((0, n_x - 1), (0, n_y - 1), stir_grid.extents[2]), (n_x, n_y, stir_grid.counts[2]))
    return resample_time(frame.histogram, camera.bin_width, target, crop=True, exponent=camera.lct_exponent).values


def render_multi(state, wall_points, measurement, stirs, return_weights=False):
    r"""Superposed rendering of all objects of one particle.

    Args:
        state (array): object centroids, a ``3M``-vector
        wall_points (array): world wall points of shape ``(..., 3)``
        measurement (array): transformed measurement of shape ``wall_points.shape[:-1] + (n_v,)``
        stirs (list[CanonicalSTIR]): one STIR per object
        return_weights (bool): also return the per-object weights

    Returns:
        array or tuple[array, array]: the rendered cube, and optionally the ``M`` weights
    """
    state = np.asarray(state, dtype=np.float64).reshape(-1, 3)
    measurement = np.asarray(measurement, dtype=np.float64)
    m_norm = np.linalg.norm(measurement)

    rendered = np.zeros(measurement.shape)
    weights = np.zeros(len(stirs))
    for m, (stir, position) in enumerate(zip(stirs, state)):
        single = render_mas(stir, wall_points, stir.shift_for(position))
        norm = np.linalg.norm(single) * m_norm
        if norm > 0:
            weights[m] = max(0.0, float(np.sum(single * measurement)) / norm)
        rendered += weights[m] * single

    if return_weights:
        return rendered, weights
    return rendered


def exchangeable_groups(stirs):
    """Groups of object indices whose STIRs describe the same object.

    Args:
        stirs (list[CanonicalSTIR]): one STIR per object

    Returns:
        list[list[int]]: the groups, in order of their first member
    """
    groups = []
    for m, stir in enumerate(stirs):
        for group in groups:
            other = stirs[group[0]]
            same = other is stir or (
                other.grid == stir.grid and other.z_ref == stir.z_ref and np.array_equal(other.values, stir.values)
            )
            if same:
                group.append(m)
                break
        else:
            groups.append([m])
    return groups


def _slot_permutations(groups, M):
    """Slot orders that only exchange objects within a group, the identity first."""
    label = np.empty(M, dtype=np.int64)
    for g, members in enumerate(groups):
        label[members] = g
    perms = [perm for perm in itertools.permutations(range(M)) if np.array_equal(label[list(perm)], label)]
    return np.array(perms, dtype=np.int64)


def align_slots(states, reference, permutations):
    """Reorders the object slots of every particle to best match a reference.

    Args:
        states (array): particle states of shape ``(K, 3M)``
        reference (array): object positions of shape ``(M, 3)``
        permutations (array[int]): allowed slot orders of shape ``(P, M)``; ties go
            to the first

    Returns:
        array: the reordered states; row ``k`` minimizes the summed distance of its
        slots to ``reference``
    """
    reference = np.asarray(reference, dtype=np.float64)
    K, M = len(states), len(reference)
    candidates = np.asarray(states, dtype=np.float64).reshape(K, M, 3)[:, permutations]
    cost = np.linalg.norm(candidates - reference, axis=-1).sum(axis=-1)
    best = np.argmin(cost, axis=1)
    return candidates[np.arange(K), best].reshape(K, 3 * M)


def _window_mean(points, weights, center, radius, max_iter=20):
    """Weighted mean of the points within ``radius`` of ``center``, iterated to a fixed point."""
    for _ in range(max_iter):
        inside = np.linalg.norm(points - center, axis=1) <= radius
        mass = weights[inside].sum()
        if not mass > 0:
            break
        moved = weights[inside] @ points[inside] / mass
        if np.allclose(moved, center, atol=1e-9, rtol=0):
            return moved
        center = moved
    return center


def _estimate(p, cfg):
    M = cfg.n_objects
    if cfg.estimator == "mean":
        return mean_estimate(p).reshape(M, 3)

    centers = kmeans_modes(p, min(cfg.modes, len(p)), seed=cfg.filter.seed)
    start = centers[0][0].reshape(M, 3)
    slots = p.states.reshape(len(p), M, 3)
    return np.array([_window_mean(slots[:, m], p.weights, start[m], cfg.mode_window) for m in range(M)])


def _reselect(p, scores, rng):
    """Resamples on intermediate scores; a frame without signal leaves the particles as they are."""
    try:
        return residual_resample(normalize_weights(ParticleSet(p.states, scores)), rng)
    except AllZeroWeights:
        return p


def track(dataset, cfg):
    """Tracks hidden objects through a dataset with known camera poses.

    Frame ``t`` diffuses the particles (for ``t > 0``), scores them against the
    transformed measurement, normalizes, records the posterior and its estimate
    and resamples. With several objects and ``cfg.partitioned``, the diffusion runs
    one object slot at a time with a scoring and resampling pass after every slot
    but the last. Frame ``t`` draws from ``default_rng([seed, t, 2])``. A frame on
    which every particle scores zero keeps the previous weights and is not resampled.

    Args:
        dataset (Dataset): frames with poses and wall points
        cfg (TrackConfig): tracking parameters

    Returns:
        TrackResult: posteriors and estimates
    """
    fc = cfg.filter
    stirs = cfg.stirs
    M = cfg.n_objects
    grid = stirs[0].grid
    permutations = _slot_permutations(exchangeable_groups(stirs), M)
    p = init_uniform(FilterConfig(fc.K, fc.r, fc.eta, cfg.state_bounds(), fc.seed), 3 * M)

    snapshots, estimates, object_weights, ess, degenerate = [], [], [], [], []
    reference = None
    for t, frame in enumerate(dataset.frames):
        rng = np.random.default_rng([fc.seed, t, 2])
        measurement = transform_measurement(frame, dataset.camera, grid)

        score = partial(score_particles, stirs, frame.wall_points, measurement, eta=fc.eta, workers=cfg.workers)

        if t > 0:
            if cfg.partitioned and M > 1:
                for m in range(M - 1):
                    p = propagate(p, fc.r, rng, axes=slice(3 * m, 3 * m + 3))
                    p = _reselect(p, score(p.states), rng)
                p = propagate(p, fc.r, rng, axes=slice(3 * M - 3, 3 * M))
            else:
                p = propagate(p, fc.r, rng)

        try:
            p = normalize_weights(ParticleSet(p.states, score(p.states)))
            resample = True
        except AllZeroWeights:
            logger.warning("frame %d: every particle scored zero; propagating only", t)
            degenerate.append(t)
            resample = False

        if reference is not None and len(permutations) > 1:
            p = ParticleSet(align_slots(p.states, reference, permutations), p.weights)

        snapshots.append(p)
        ess.append(effective_sample_size(p))
        estimate = _estimate(p, cfg)
        reference = estimate
        if t >= cfg.skip:
            _, w = render_multi(estimate.ravel(), frame.wall_points, measurement, stirs, return_weights=True)
            estimates.append(estimate)
            object_weights.append(w)
        logger.debug("frame %d: ess=%.1f estimate=%s", t, ess[-1], np.round(estimate, 4).tolist())

        if resample:
            p = residual_resample(p, rng)

    return TrackResult(
        snapshots,
        np.array(estimates).reshape(-1, M, 3),
        np.array(object_weights).reshape(-1, M),
        np.arange(cfg.skip, len(dataset.frames)),
        np.array(ess),
        degenerate,
    )
