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
Light-cone transform
====================

.. currentmodule:: periscope.lct

The light-cone transform (LCT) turns the confocal non-line-of-sight forward
model into a 3D convolution. With :math:`v = (c\tau/2)^2` and :math:`u = z^2`,

.. math::

    \mathcal{R}_\tau\{i\}(x, y, v) = \mathcal{R}_z\{\rho\}(x, y, v) \circledast h(x, y, v),
    \qquad h(x, y, v) = \delta(x^2 + y^2 - v),

where :math:`\mathcal{R}_\tau` samples the transient at :math:`\tau = 2\sqrt{v}/c` and scales
it by :math:`v^{3/2}`, and :math:`\mathcal{R}_z` samples the albedo at :math:`z=\sqrt{u}` and
scales it by :math:`1/(2\sqrt{u})`.

Grids and cubes
---------------

.. autosummary::
    GridSpec
    LctCube
    AlbedoVolume

Resampling
----------

.. autosummary::
    resample_time
    resample_depth
    inverse_resample_depth

Convolution
-----------

.. autosummary::
    psf_kernel
    convolve3d
    convolve3d_direct
    kernel_grid
    lct_forward

Code details
------------
"""
from dataclasses import dataclass

import numpy as np
from numba import jit
from repoze.lru import lru_cache
from scipy.signal import fftconvolve

from ._errors import ExtentMismatch, GridMismatch, InvalidValues, SingularDepth
from .geometry import SPEED_OF_LIGHT

__all__ = [
    "GridSpec",
    "LctCube",
    "AlbedoVolume",
    "resample_time",
    "resample_depth",
    "inverse_resample_depth",
    "psf_kernel",
    "convolve3d",
    "convolve3d_direct",
    "kernel_grid",
    "lct_forward",
]


@dataclass(frozen=True)
class GridSpec:
    r"""Regular grid with inclusive per-axis extents.

    Spatial axes are in meters, the :math:`v` and :math:`u` axes of LCT cubes in
    square meters. Node ``k`` of axis ``i`` sits at ``min_i + k * spacing_i``.

    Args:
        extents (tuple[tuple[float]]): ``(min, max)`` per axis
        counts (tuple[int]): number of nodes per axis
    """

    extents: tuple
    counts: tuple

    def __post_init__(self):
        extents = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        counts = tuple(int(n) for n in self.counts)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "counts", counts)

        if len(extents) != len(counts) or not extents:
            raise GridMismatch("A grid needs one extent and one count per axis.")
        for (lo, hi), n in zip(extents, counts):
            if not lo < hi:
                raise GridMismatch(f"Grid extents must be increasing, got [{lo}, {hi}].")
            if n < 2:
                raise GridMismatch("Every grid axis needs at least two nodes.")

    @classmethod
    def from_spacing(cls, origin, spacing, counts):
        """Grid with given first node, spacing and node counts per axis."""
        extents = tuple((o, o + d * (n - 1)) for o, d, n in zip(origin, spacing, counts))
        return cls(extents, counts)

    @property
    def ndim(self):
        """int: number of axes"""
        return len(self.counts)

    @property
    def shape(self):
        """tuple[int]: node counts"""
        return self.counts

    @property
    def spacing(self):
        """tuple[float]: node spacing per axis"""
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.counts))

    @property
    def cell_volume(self):
        """float: product of the spacings"""
        return float(np.prod(self.spacing))

    def axis(self, i):
        """Node coordinates along axis ``i``.

        Args:
            i (int): axis index

        Returns:
            array: the coordinates
        """
        lo, _ = self.extents[i]
        return lo + self.spacing[i] * np.arange(self.counts[i])

    def points(self):
        """All grid nodes as a ``(prod(counts), ndim)`` array, C order."""
        mesh = np.meshgrid(*(self.axis(i) for i in range(self.ndim)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def replace_axis(self, i, extent, count):
        """Copy of the grid with axis ``i`` replaced."""
        extents = list(self.extents)
        counts = list(self.counts)
        extents[i] = extent
        counts[i] = count
        return GridSpec(tuple(extents), tuple(counts))

    def translate(self, offset):
        """Copy of the grid with every node moved by ``offset``."""
        return GridSpec(tuple((lo + o, hi + o) for (lo, hi), o in zip(self.extents, offset)), self.counts)


@dataclass(frozen=True, eq=False)
class _GridValues:
    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.issubdtype(values.dtype, np.floating):
            values = values.astype(np.float64)
        if values.shape != self.grid.shape:
            raise GridMismatch(f"Values of shape {values.shape} do not match a grid of shape {self.grid.shape}.")
        if not np.all(np.isfinite(values)):
            raise InvalidValues("Grid values must be finite.")
        object.__setattr__(self, "values", values)


class LctCube(_GridValues):
    r"""Values of :math:`I(x, y, v)` on a grid over :math:`(x, y, v)`.

    Args:
        values (array): array of shape ``grid.shape``
        grid (GridSpec): the sampling grid
    """


class AlbedoVolume(_GridValues):
    r"""Values of :math:`\rho(x, y, z)` on a grid over :math:`(x, y, z)` in meters.

    Args:
        values (array): nonnegative array of shape ``grid.shape``
        grid (GridSpec): the sampling grid
    """

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise InvalidValues("Albedo values must be nonnegative.")


def _interp_last_axis(values, index):
    """Linear interpolation of ``values[..., index]`` for fractional ``index``; zero outside."""
    n = values.shape[-1]
    i0 = np.floor(index).astype(np.int64)
    frac = index - i0
    inside = (index >= 0) & (index <= n - 1)

    i0 = np.clip(i0, 0, n - 1)
    i1 = np.clip(i0 + 1, 0, n - 1)
    out = values[..., i0] * (1 - frac) + values[..., i1] * frac
    out[..., ~inside] = 0.0
    return out


def resample_time(histogram, bin_width, target, crop=False, exponent=1.5):
    r"""Resamples transient histograms onto a uniform :math:`v` grid.

    Output node :math:`v` receives the histogram linearly interpolated at
    :math:`\tau = 2\sqrt{v}/c` and multiplied by :math:`v^{\text{exponent}}`.
    Temporal bin ``k`` is taken to sit at :math:`\tau = k\,\Delta t`.

    Args:
        histogram (array): counts of shape ``(n_x, n_y, n_t)``
        bin_width (float): seconds per temporal bin
        target (GridSpec): output grid; its first two counts must be ``(n_x, n_y)``
        crop (bool): if ``True``, target nodes outside the histogram range read as zero
        exponent (float): amplitude exponent; ``1.5`` is the diffuse light-cone law and
            ``0.5`` its retroreflective counterpart

    Returns:
        LctCube: the resampled cube on ``target``

    Raises:
        ExtentMismatch: if ``target`` maps outside ``[0, n_t * bin_width]`` and ``crop`` is ``False``
    """
    histogram = np.asarray(histogram, dtype=np.float64)
    n_x, n_y, n_t = histogram.shape
    if target.counts[:2] != (n_x, n_y):
        raise GridMismatch(f"Target grid {target.counts} does not match histograms of shape {histogram.shape}.")

    v = target.axis(2)
    index = 2 * np.sqrt(np.clip(v, 0, None)) / (SPEED_OF_LIGHT * bin_width)
    outside = (v < 0) | (index > n_t)
    if np.any(outside) and not crop:
        raise ExtentMismatch("The target v-grid reaches outside the histogram time range.")

    # the bin past the last one reads as zero
    padded = np.concatenate([histogram, np.zeros((n_x, n_y, 1))], axis=2)
    values = _interp_last_axis(padded, _snap(np.where(outside, -1.0, index)))
    values *= np.clip(v, 0, None) ** exponent
    return LctCube(values, target)


def resample_depth(volume, target):
    r"""Resamples an albedo volume from :math:`z` onto a uniform :math:`u = z^2` grid.

    Args:
        volume (AlbedoVolume): albedo on an :math:`(x, y, z)` grid
        target (GridSpec): output grid over :math:`(x, y, u)`, with the same
            lateral axes as ``volume``

    Returns:
        LctCube: :math:`\rho(x, y, \sqrt{u}) / (2\sqrt{u})` on ``target``

    Raises:
        SingularDepth: if the ``u`` axis reaches zero
    """
    _check_lateral(volume.grid, target)
    u = target.axis(2)
    if np.any(u <= 0):
        raise SingularDepth("The u-grid must exclude u = 0.")

    z_min, _ = volume.grid.extents[2]
    index = (np.sqrt(u) - z_min) / volume.grid.spacing[2]
    values = _interp_last_axis(np.asarray(volume.values, dtype=np.float64), _snap(index))
    return LctCube(values / (2 * np.sqrt(u)), target)


def inverse_resample_depth(cube, grid):
    r"""Maps a cube over :math:`(x, y, u)` back to an albedo volume over :math:`(x, y, z)`.

    This is the inverse of :func:`resample_depth` up to interpolation error.

    Args:
        cube (LctCube): values on an :math:`(x, y, u)` grid
        grid (GridSpec): output grid over :math:`(x, y, z)` with :math:`z > 0`

    Returns:
        AlbedoVolume: the albedo volume
    """
    _check_lateral(cube.grid, grid)
    z = grid.axis(2)
    if np.any(z <= 0):
        raise SingularDepth("The z-grid must exclude z = 0.")

    u_min, _ = cube.grid.extents[2]
    index = (z**2 - u_min) / cube.grid.spacing[2]
    values = _interp_last_axis(np.asarray(cube.values, dtype=np.float64), _snap(index))
    return AlbedoVolume(np.clip(values * 2 * z, 0, None), grid)


def _snap(index, atol=1e-9):
    """Rounds fractional indices that are within ``atol`` of an integer."""
    rounded = np.round(index)
    return np.where(np.abs(index - rounded) < atol, rounded, index)


def _check_lateral(a, b):
    if a.counts[:2] != b.counts[:2] or not np.allclose(a.extents[:2], b.extents[:2], atol=1e-12, rtol=0):
        raise GridMismatch("Both grids must share their x and y axes.")


@lru_cache(maxsize=16)
def psf_kernel(grid, thickness=1.0, antialias=False):
    r"""Rasterized parabola :math:`h(x, y, v) = \delta(x^2 + y^2 - v)`.

    A cell is nonzero only where :math:`|x^2 + y^2 - v|` is at most
    ``thickness`` times half the :math:`v` spacing; every nonempty :math:`(x, y)`
    column is normalized to unit sum. Parabola branches beyond the :math:`v`
    extent are cropped.

    Results are cached per ``(grid, thickness, antialias)`` and returned read-only.

    Args:
        grid (GridSpec): kernel grid over :math:`(x, y, v)`
        thickness (float): band width in :math:`v` bins
        antialias (bool): if ``True``, use linear splatting between the two nearest
            :math:`v` nodes instead of a uniform band

    Returns:
        LctCube: the kernel
    """
    x, y, v = (grid.axis(i) for i in range(3))
    dv = grid.spacing[2]
    r2 = x[:, None, None] ** 2 + y[None, :, None] ** 2
    distance = np.abs(r2 - v[None, None, :])

    if antialias:
        weights = np.clip(1 - distance / dv, 0, None)
    else:
        weights = (distance <= thickness * dv / 2 + 1e-12 * dv).astype(np.float64)

    mass = weights.sum(axis=2, keepdims=True)
    weights = np.divide(weights, mass, out=np.zeros_like(weights), where=mass > 0)
    weights.setflags(write=False)
    return LctCube(weights, grid)


def _offsets(a, b):
    """Index of ``b``'s coordinate origin, per axis."""
    offsets = []
    for (lo, _), da, db in zip(b.extents, a.spacing, b.spacing):
        if not np.isclose(da, db, rtol=1e-9, atol=0):
            raise GridMismatch("Convolved grids must share their spacing.")
        k = -lo / db
        if abs(k - round(k)) > 1e-6:
            raise GridMismatch("The second grid must have a node at the coordinate origin.")
        offsets.append(int(round(k)))
    return tuple(offsets)


def convolve3d(a, b):
    r"""Linear convolution :math:`(a \circledast b)(X) = \sum_Y a(Y)\, b(X - Y)` on ``a``'s grid.

    Both cubes are zero-padded and multiplied in the frequency domain, so
    there is no wraparound. Coordinates of ``b`` are offsets: its grid must
    contain the origin.

    Args:
        a (LctCube): first operand; fixes the output grid
        b (LctCube): second operand

    Returns:
        LctCube: the convolution cropped to ``a.grid``

    Raises:
        GridMismatch: on unequal spacings
    """
    offsets = _offsets(a.grid, b.grid)
    full = fftconvolve(a.values, b.values, mode="full")

    out = np.zeros(a.grid.shape)
    src = []
    dst = []
    for n, k, m in zip(a.grid.shape, offsets, full.shape):
        start, stop = max(k, 0), min(k + n, m)
        src.append(slice(start, stop))
        dst.append(slice(start - k, stop - k))
    out[tuple(dst)] = full[tuple(src)]
    return LctCube(out, a.grid)


def convolve3d_direct(a, b):
    """Nested-loop evaluation of :func:`convolve3d`.

    Args:
        a (LctCube): first operand; fixes the output grid
        b (LctCube): second operand

    Returns:
        LctCube: the convolution cropped to ``a.grid``
    """
    offsets = np.array(_offsets(a.grid, b.grid), dtype=np.int64)
    values = _convolve_direct(
        np.asarray(a.values, dtype=np.float64), np.asarray(b.values, dtype=np.float64), offsets
    )
    return LctCube(values, a.grid)


@jit(nopython=True)
def _convolve_direct(a, b, offsets):  # pragma: no cover
    nx, ny, nz = a.shape
    mx, my, mz = b.shape
    out = np.zeros(a.shape)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                total = 0.0
                for p in range(nx):
                    bi = i + offsets[0] - p
                    if bi < 0 or bi >= mx:
                        continue
                    for q in range(ny):
                        bj = j + offsets[1] - q
                        if bj < 0 or bj >= my:
                            continue
                        for r in range(nz):
                            bk = k + offsets[2] - r
                            if 0 <= bk < mz:
                                total += a[p, q, r] * b[bi, bj, bk]
                out[i, j, k] = total
    return out


def kernel_grid(grid):
    r"""Grid of :math:`(x, y, v)` offsets covering every pair of nodes of ``grid``.

    Args:
        grid (GridSpec): grid over :math:`(x, y, v)`

    Returns:
        GridSpec: lateral offsets symmetric about zero, :math:`v` offsets from zero
    """
    (nx, ny, nv), (dx, dy, dv) = grid.counts, grid.spacing
    return GridSpec(
        ((-(nx - 1) * dx, (nx - 1) * dx), (-(ny - 1) * dy, (ny - 1) * dy), (0.0, (nv - 1) * dv)),
        (2 * nx - 1, 2 * ny - 1, nv),
    )


def lct_forward(volume, grid, thickness=1.0, antialias=False):
    r"""Noiseless light-cone transformed measurement of an albedo volume.

    Args:
        volume (AlbedoVolume): albedo over :math:`(x, y, z)` with :math:`z > 0`
        grid (GridSpec): output grid over :math:`(x, y, v)`, sharing the lateral axes of ``volume``
        thickness (float): parabola band width in :math:`v` bins
        antialias (bool): linear splatting of the parabola, see :func:`psf_kernel`

    Returns:
        LctCube: :math:`\mathcal{R}_z\{\rho\} \circledast h` on ``grid``
    """
    depth = resample_depth(volume, grid)
    return convolve3d(depth, psf_kernel(kernel_grid(grid), thickness, antialias))
