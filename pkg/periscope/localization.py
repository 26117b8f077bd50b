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
Camera localization
===================

.. currentmodule:: periscope.localization

Recovers the camera pose from the wall point cloud and a static hidden
landmark of known shape. World coordinates put the origin at the landmark's
lateral position with the wall at :math:`z=0`.

A wall point seen at pixel :math:`u` is :math:`x = R K^{-1} u + t`. Fitting a plane
to the camera-frame point cloud recovers the pitch and yaw of :math:`R` and the
height :math:`t_z` deterministically; the lateral translation
:math:`(t_x, t_y)` is the only quantity the particle filter has to infer. A
particle shifts the aligned wall samples by its hypothesis and renders the
landmark without any object shift.

.. autosummary::
    LocalizationResult
    localize

Code details
------------
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ._errors import AllZeroWeights
from .geometry import WALL_FLIP, fit_plane
from .particle_filter import (
    ParticleSet,
    effective_sample_size,
    init_uniform,
    mean_estimate,
    normalize_weights,
    propagate,
    residual_resample,
)
from .stir import score_particles
from .tracking import transform_measurement

__all__ = ["LocalizationResult", "localize"]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LocalizationResult:
    """Output of :func:`localize`.

    Args:
        snapshots (list[ParticleSet]): normalized ``(x, y)`` posterior of every frame
        positions (array): estimated camera centers of shape ``(T - skip, 3)``
        heights (array): plane-fit camera heights of every frame
        rotations (array): plane-fit camera-to-world rotations of shape ``(T, 3, 3)``
        frames (array): frame indices of ``positions``
        degenerate (list[int]): frames on which every particle scored zero
    """

    snapshots: list
    positions: np.ndarray
    heights: np.ndarray
    rotations: np.ndarray
    frames: np.ndarray
    degenerate: list = field(default_factory=list)


def aligned_wall_points(point_cloud):
    """World wall samples of a camera at lateral position ``(0, 0)``.

    Args:
        point_cloud (array): camera-frame wall points of shape ``(..., 3)``

    Returns:
        tuple[float, array, array]: camera height, camera-to-world rotation and wall
        points of the same shape as ``point_cloud`` lying on :math:`z=0`
    """
    height, R, aligned = fit_plane(point_cloud)
    wall = aligned @ WALL_FLIP
    wall[..., 2] = 0.0
    return height, WALL_FLIP @ R, wall


def localize(dataset, stir, cfg, skip=0, workers=1):
    """Estimates the camera trajectory from a static hidden landmark.

    The camera poses stored in ``dataset`` are ignored; every frame needs a
    camera-frame ``point_cloud``. Frame ``t`` draws from ``default_rng([seed, t, 2])``.

    Args:
        dataset (Dataset): frames with point clouds
        stir (CanonicalSTIR): STIR of the landmark, computed at its true depth
        cfg (FilterConfig): filter parameters with two ``(x, y)`` bounds
        skip (int): leading frames left out of ``positions``
        workers (int): threads used for particle scoring

    Returns:
        LocalizationResult: posteriors and estimates

    Raises:
        DegeneratePointSet: if a point cloud does not define a plane
    """
    p = init_uniform(cfg, 2)

    snapshots, positions, heights, rotations, degenerate = [], [], [], [], []
    for t, frame in enumerate(dataset.frames):
        rng = np.random.default_rng([cfg.seed, t, 2])
        if t > 0:
            p = propagate(p, cfg.r, rng)

        height, R, wall = aligned_wall_points(frame.point_cloud)
        measurement = transform_measurement(frame, dataset.camera, stir.grid)

        # moving the camera by (x, y) is moving the landmark by (-x, -y)
        states = np.column_stack([-p.states, np.full(len(p), stir.z_ref)])
        scores = score_particles([stir], wall, measurement, states, cfg.eta, workers)
        try:
            p = normalize_weights(ParticleSet(p.states, scores))
            resample = True
        except AllZeroWeights:
            logger.warning("frame %d: every particle scored zero; propagating only", t)
            degenerate.append(t)
            resample = False

        snapshots.append(p)
        heights.append(height)
        rotations.append(R)
        xy = mean_estimate(p)
        if t >= skip:
            positions.append([xy[0], xy[1], height])
        logger.debug("frame %d: ess=%.1f camera=(%.4f, %.4f, %.4f)", t, effective_sample_size(p), *xy, height)

        if resample:
            p = residual_resample(p, rng)

    return LocalizationResult(
        snapshots,
        np.array(positions).reshape(-1, 3),
        np.array(heights),
        np.array(rotations).reshape(-1, 3, 3),
        np.arange(skip, len(dataset.frames)),
        degenerate,
    )
