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
Reconstruction
==============

.. currentmodule:: periscope.reconstruction

Multi-frame fusion and filtered backprojection.

A moving camera samples the STIR at wall points that change from frame to
frame. :func:`accumulate` gathers the light-cone transformed columns of all
frames into one irregular :class:`SampleCloud`, averaging samples that fall on
the same wall location. :func:`backproject` then spreads every sample over the
sphere of voxels at its measured range,

.. math::

    V(x) = \sum_s r_s(x)^{k - 2e}\, c_s\big(r_s(x)^2\big), \qquad r_s(x) = |x - w_s|,

where :math:`c_s` is the column of sample :math:`s` on the :math:`v` axis, :math:`k` the
falloff power and :math:`e` the amplitude exponent used by the transform, and
sharpens the result with a discrete Laplacian along :math:`z`.

Fusion and backprojection
-------------------------

.. autosummary::
    SampleCloud
    accumulate
    backproject
    baseline_argmax_track

Volume summaries
----------------

.. autosummary::
    lateral_fwhm
    threshold_points
    volume_centroid

Code details
------------
"""
import logging
from dataclasses import dataclass

import numpy as np
from numba import jit

from ._errors import EmptyCloud, GridMismatch, InvalidValues
from ._parallel import chunk_slices, parallel_map
from .lct import AlbedoVolume, GridSpec, resample_time
from .simulator import Dataset

__all__ = [
    "SampleCloud",
    "accumulate",
    "backproject",
    "baseline_argmax_track",
    "lateral_fwhm",
    "threshold_points",
    "volume_centroid",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampleCloud:
    """Light-cone transformed columns at irregular wall locations.

    Args:
        wall_points (array): world wall points of shape ``(N, 3)``
        columns (array): shape ``(N, n_v)`` on ``v_grid``
        v_grid (GridSpec): one-dimensional :math:`v` grid
        exponent (float): amplitude exponent applied by the transform
        falloff_power (int): radiometric falloff power of the camera
    """

    wall_points: np.ndarray
    columns: np.ndarray
    v_grid: GridSpec
    exponent: float = 0.5
    falloff_power: int = 2

    def __post_init__(self):
        wall_points = np.asarray(self.wall_points, dtype=np.float64).reshape(-1, 3)
        columns = np.asarray(self.columns, dtype=np.float64)
        if columns.shape != (len(wall_points), self.v_grid.counts[0]):
            raise GridMismatch("Columns must hold one row per sample on the v grid of the cloud.")
        if np.any(np.abs(wall_points[:, 2]) > 1e-6):
            raise InvalidValues("Wall points must lie on the plane z = 0.")
        if not np.all(np.isfinite(columns)):
            raise InvalidValues("Sample columns must be finite.")
        object.__setattr__(self, "wall_points", wall_points)
        object.__setattr__(self, "columns", columns)

    def __len__(self):
        return len(self.wall_points)


def default_v_grid(camera, oversample=4):
    """Uniform :math:`v` grid covering the full histogram range of a camera."""
    v_max = (camera.n_bins * camera.bin_length / 2) ** 2
    return GridSpec(((0.0, v_max),), (oversample * camera.n_bins,))


def accumulate(dataset, v_grid=None, cell=0.005):
    """Fuses the frames of a static scene into one sample cloud.

    Args:
        dataset (Dataset): frames with known poses
        v_grid (GridSpec): one-dimensional target :math:`v` grid; defaults to
            :func:`default_v_grid`
        cell (float): lateral size in meters of the cells within which samples are averaged

    Returns:
        SampleCloud: samples in order of first appearance
    """
    camera = dataset.camera
    if v_grid is None:
        v_grid = default_v_grid(camera)

    walls, columns = [], []
    for frame in dataset.frames:
        n_x, n_y, _ = np.shape(frame.histogram)
        target = GridSpec(((0, n_x - 1), (0, n_y - 1), v_grid.extents[0]), (n_x, n_y, v_grid.counts[0]))
        cube = resample_time(frame.histogram, camera.bin_width, target, crop=True, exponent=camera.lct_exponent)
        walls.append(np.asarray(frame.wall_points, dtype=np.float64).reshape(-1, 3))
        columns.append(cube.values.reshape(n_x * n_y, -1))
    walls = np.concatenate(walls)
    columns = np.concatenate(columns)

    keys = np.round(walls[:, :2] / cell).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    # relabel groups by first appearance
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    group = rank[inverse]

    counts = np.bincount(group)[:, None]
    fused_walls = np.zeros((len(first), 3))
    fused_columns = np.zeros((len(first), columns.shape[1]))
    np.add.at(fused_walls, group, walls)
    np.add.at(fused_columns, group, columns)

    logger.info("fused %d samples into %d wall locations", len(walls), len(first))
    return SampleCloud(
        fused_walls / counts, fused_columns / counts, v_grid, camera.lct_exponent, camera.falloff_power
    )


@jit(nopython=True, nogil=True)
def _backproject_slab(x, y, z, walls, columns, v0, dv, power):  # pragma: no cover
    out = np.zeros((x.shape[0], y.shape[0], z.shape[0]))
    n_v = columns.shape[1]
    for i in range(x.shape[0]):
        for j in range(y.shape[0]):
            for k in range(z.shape[0]):
                total = 0.0
                for s in range(walls.shape[0]):
                    dx = x[i] - walls[s, 0]
                    dy = y[j] - walls[s, 1]
                    dz = z[k] - walls[s, 2]
                    r2 = dx * dx + dy * dy + dz * dz
                    f = (r2 - v0) / dv
                    if f < 0 or f > n_v - 1:
                        continue
                    a = int(np.floor(f))
                    frac = f - a
                    value = columns[s, a] * (1.0 - frac)
                    if frac > 0.0:
                        value += columns[s, a + 1] * frac
                    total += value * np.sqrt(r2) ** power
                out[i, j, k] = total
    return out


def backproject(cloud, grid, workers=1):
    """Filtered backprojection of a sample cloud onto a voxel grid.

    Voxel slabs along :math:`x` are computed independently, so the result does not
    depend on ``workers``.

    Args:
        cloud (SampleCloud): fused samples
        grid (GridSpec): voxel grid over :math:`(x, y, z)` with :math:`z > 0`
        workers (int): number of threads

    Returns:
        AlbedoVolume: the clamped, Laplacian-filtered volume

    Raises:
        EmptyCloud: if the cloud holds no samples
    """
    if len(cloud) == 0:
        raise EmptyCloud("Cannot backproject an empty sample cloud.")
    if grid.ndim != 3:
        raise GridMismatch("Backprojection needs a three-dimensional voxel grid.")

    x, y, z = (grid.axis(i) for i in range(3))
    v0, _ = cloud.v_grid.extents[0]
    dv = cloud.v_grid.spacing[0]
    power = float(cloud.falloff_power - 2 * cloud.exponent)

    def run(chunk):
        return _backproject_slab(x[chunk], y, z, cloud.wall_points, cloud.columns, v0, dv, power)

    raw = np.concatenate(parallel_map(run, chunk_slices(len(x), workers), workers), axis=0)

    padded = np.pad(raw, ((0, 0), (0, 0), (1, 1)))
    filtered = 2 * raw - padded[:, :, :-2] - padded[:, :, 2:]
    return AlbedoVolume(np.clip(filtered, 0, None), grid)


def baseline_argmax_track(dataset, grid, v_grid=None, workers=1):
    """Per-frame backprojection tracker without a motion prior.

    Every frame is backprojected on its own and the estimate is the center of the
    brightest voxel, ties going to the lowest linear index.

    Args:
        dataset (Dataset): frames with known poses
        grid (GridSpec): voxel grid over :math:`(x, y, z)`
        v_grid (GridSpec): one-dimensional :math:`v` grid
        workers (int): threads per backprojection

    Returns:
        array: estimates of shape ``(T, 3)``; frames whose volume is all zero hold NaN
    """
    points = grid.points()
    estimates = np.full((dataset.frame_count, 3), np.nan)
    for t, frame in enumerate(dataset.frames):
        single = Dataset(dataset.camera, [frame])
        volume = backproject(accumulate(single, v_grid), grid, workers)
        if not np.any(volume.values > 0):
            logger.warning("frame %d: empty backprojection; no estimate", t)
            continue
        estimates[t] = points[np.argmax(volume.values)]
    return estimates


def lateral_fwhm(volume, axis=0):
    """Full width at half maximum of the brightest blob along a lateral axis.

    The profile runs through the brightest voxel; crossings of half the peak are
    located by linear interpolation.

    Args:
        volume (AlbedoVolume): the volume
        axis (int): ``0`` for :math:`x`, ``1`` for :math:`y`

    Returns:
        float: the width in meters
    """
    values = volume.values
    peak = np.unravel_index(np.argmax(values), values.shape)
    index = list(peak)
    index[axis] = slice(None)
    profile = values[tuple(index)]
    half = profile[peak[axis]] / 2
    spacing = volume.grid.spacing[axis]

    lo = peak[axis]
    while lo > 0 and profile[lo - 1] >= half:
        lo -= 1
    hi = peak[axis]
    while hi < len(profile) - 1 and profile[hi + 1] >= half:
        hi += 1

    left = float(lo)
    if lo > 0:
        left = lo - (profile[lo] - half) / (profile[lo] - profile[lo - 1])
    right = float(hi)
    if hi < len(profile) - 1:
        right = hi + (profile[hi] - half) / (profile[hi] - profile[hi + 1])
    return (right - left) * spacing


def threshold_points(volume, fraction=0.5):
    """Centers and values of the voxels at or above ``fraction`` of the maximum.

    Args:
        volume (AlbedoVolume): the volume
        fraction (float): threshold relative to the maximum

    Returns:
        tuple[array, array]: points of shape ``(N, 3)`` and their values
    """
    values = volume.values.ravel()
    peak = values.max()
    if peak <= 0:
        return np.zeros((0, 3)), np.zeros(0)
    keep = values >= fraction * peak
    return volume.grid.points()[keep], values[keep]


def volume_centroid(volume, fraction=0.5):
    """Value-weighted centroid of the thresholded voxels, or NaNs for an empty volume."""
    points, values = threshold_points(volume, fraction)
    if len(values) == 0:
        return np.full(3, np.nan)
    return np.average(points, axis=0, weights=values)
