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
Space-time impulse responses
============================

.. currentmodule:: periscope.stir

The canonical space-time impulse response (STIR) of an object is its
light-cone transformed measurement over a dense virtual wall, with the object
centroid at lateral position :math:`(0, 0)` and depth :math:`z_\text{ref}`:

.. math::

    I(x, y, v) = \sum_p \rho_p\, \delta\big((x - p_x)^2 + (y - p_y)^2 + (z_\text{ref} + p_z)^2 - v\big).

Translating the object by :math:`(\Delta x, \Delta y)` and moving it to depth
:math:`z` translates the STIR by :math:`(\Delta x, \Delta y, z^2 - z_\text{ref}^2)`,
so rendering a hypothesis is an interpolated lookup instead of a simulation.

.. autosummary::
    CanonicalSTIR
    precompute_canonical_stir
    render_mas
    reanchor
    score_particles

Code details
------------
"""
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import jit
from scipy.ndimage import gaussian_filter1d

from ._errors import FootprintOverflowWarning, GridMismatch, InvalidValues, ObjectBehindWall
from ._parallel import chunk_slices, parallel_map
from .geometry import SPEED_OF_LIGHT
from .lct import GridSpec, LctCube

__all__ = ["CanonicalSTIR", "precompute_canonical_stir", "render_mas", "reanchor", "score_particles"]


@dataclass(frozen=True, eq=False)
class CanonicalSTIR:
    r"""Precomputed STIR of one object.

    Args:
        values (array): nonnegative float32 array of shape ``grid.shape``
        grid (GridSpec): grid over :math:`(x, y, v)`
        z_ref (float): depth of the object centroid the STIR was computed for
        pulse_sigma_v (float): std of the Gaussian blur applied along :math:`v` (square meters)
        overflow (int): number of parabola samples that fell outside the :math:`v` extent
    """

    values: np.ndarray
    grid: GridSpec
    z_ref: float = 1.0
    pulse_sigma_v: float = 0.0
    overflow: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if self.grid.ndim != 3 or values.shape != self.grid.shape:
            raise GridMismatch("STIR values must match a three-dimensional grid.")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidValues("STIR values must be finite and nonnegative.")
        if not self.z_ref > 0:
            raise ObjectBehindWall("The reference depth must be positive.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def v_ref(self):
        """float: :math:`v` of the object centroid, :math:`z_\\text{ref}^2`"""
        return self.z_ref**2

    def shift_for(self, position):
        r"""Render shift :math:`(x, y, z^2 - z_\text{ref}^2)` of an object centroid at ``position``."""
        x, y, z = position
        return np.array([x, y, z**2 - self.v_ref])

    def cube(self):
        """The STIR as an :class:`~.LctCube`."""
        return LctCube(self.values.astype(np.float64), self.grid)


@jit(nopython=True, nogil=True)
def _splat_parabolas(points, albedo, x, y, v0, dv, nv):  # pragma: no cover
    out = np.zeros((x.shape[0], y.shape[0], nv))
    overflow = 0
    for n in range(points.shape[0]):
        for i in range(x.shape[0]):
            dx = x[i] - points[n, 0]
            for j in range(y.shape[0]):
                dy = y[j] - points[n, 1]
                f = (dx * dx + dy * dy + points[n, 2] - v0) / dv
                k = int(np.floor(f))
                if k < 0 or k > nv - 1 or (k == nv - 1 and f > k):
                    overflow += 1
                    continue
                frac = f - k
                out[i, j, k] += albedo[n] * (1.0 - frac)
                if frac > 0.0:
                    out[i, j, k + 1] += albedo[n] * frac
    return out, overflow


def precompute_canonical_stir(obj, grid, pulse_sigma=0.0, z_ref=1.0):
    r"""Rasterizes the canonical STIR of an object as a sum of parabolas.

    Every object point deposits its albedo as unit mass in each :math:`(x, y)`
    column, split linearly between the two :math:`v` nodes around
    :math:`(x - p_x)^2 + (y - p_y)^2 + (z_\text{ref} + p_z)^2`. The result is then
    blurred along :math:`v` by the laser pulse evaluated at unit depth,
    :math:`\sigma' = \sigma c`.

    Args:
        obj (ObjectModel): the object, centroid at the origin
        grid (GridSpec): grid over :math:`(x, y, v)`
        pulse_sigma (float): laser pulse std in seconds
        z_ref (float): reference depth of the centroid in meters

    Returns:
        CanonicalSTIR: the STIR

    Raises:
        ObjectBehindWall: if a point lies at or behind the wall at the reference depth
    """
    if grid.ndim != 3:
        raise GridMismatch("A STIR grid has three axes (x, y, v).")
    depth = z_ref + obj.points[:, 2]
    if np.any(depth <= 0):
        raise ObjectBehindWall("The object crosses the wall at the reference depth.")

    points = np.column_stack([obj.points[:, :2], depth**2])
    v0, _ = grid.extents[2]
    dv = grid.spacing[2]
    values, overflow = _splat_parabolas(points, obj.albedo, grid.axis(0), grid.axis(1), v0, dv, grid.counts[2])

    sigma_v = pulse_sigma * SPEED_OF_LIGHT
    if sigma_v > 0:
        values = gaussian_filter1d(values, sigma_v / dv, axis=2, mode="constant", truncate=4.0)

    if overflow:
        warnings.warn(
            f"{overflow} parabola samples fall outside the v extent of the STIR grid.",
            FootprintOverflowWarning,
        )
    return CanonicalSTIR(values, grid, z_ref, sigma_v, int(overflow))


def reanchor(stir, offset):
    """STIR with its grid translated by ``offset``.

    Reading the result at ``X + offset`` gives the value the original holds at ``X``.

    Args:
        stir (CanonicalSTIR): the STIR
        offset (array[float]): translation in :math:`(x, y, v)`

    Returns:
        CanonicalSTIR: the translated STIR
    """
    return replace(stir, grid=stir.grid.translate(offset))


@jit(nopython=True, nogil=True)
def _snap(f):  # pragma: no cover
    r = np.floor(f + 0.5)
    if abs(f - r) < 1e-9:
        return r
    return f


@jit(nopython=True, nogil=True)
def _render_into(out, values, fx, fy, fv0):  # pragma: no cover
    """Bilinear lookup of the column at ``(fx, fy)`` shifted to start at fractional index ``fv0``."""
    nx, ny, nv = values.shape
    n_out = out.shape[0]
    fx = _snap(fx)
    fy = _snap(fy)
    if fx < 0 or fy < 0 or fx > nx - 1 or fy > ny - 1:
        return
    i0 = int(np.floor(fx))
    j0 = int(np.floor(fy))
    ax = fx - i0
    ay = fy - j0
    i1 = min(i0 + 1, nx - 1)
    j1 = min(j0 + 1, ny - 1)
    w00 = (1.0 - ax) * (1.0 - ay)
    w10 = ax * (1.0 - ay)
    w01 = (1.0 - ax) * ay
    w11 = ax * ay

    fv0 = _snap(fv0)
    k0 = int(np.floor(fv0))
    av = fv0 - k0
    for k in range(n_out):
        a = k0 + k
        if a < 0 or a > nv - 1 or (a == nv - 1 and av > 0.0):
            continue
        b = min(a + 1, nv - 1)
        lo = w00 * values[i0, j0, a] + w10 * values[i1, j0, a] + w01 * values[i0, j1, a] + w11 * values[i1, j1, a]
        if av > 0.0:
            hi = w00 * values[i0, j0, b] + w10 * values[i1, j0, b] + w01 * values[i0, j1, b] + w11 * values[i1, j1, b]
            out[k] = lo * (1.0 - av) + hi * av
        else:
            out[k] = lo


@jit(nopython=True, nogil=True)
def _render_pixels(values, origin, spacing, wall, shift, v_offset, n_out):  # pragma: no cover
    out = np.zeros((wall.shape[0], n_out))
    fv0 = (v_offset - shift[2]) / spacing[2]
    for p in range(wall.shape[0]):
        fx = (wall[p, 0] - shift[0] - origin[0]) / spacing[0]
        fy = (wall[p, 1] - shift[1] - origin[1]) / spacing[1]
        _render_into(out[p], values, fx, fy, fv0)
    return out


def _v_offset(stir, v_grid):
    """Offset between the first output node and the first STIR node, in meters squared."""
    if v_grid is None:
        return 0.0, stir.grid.counts[2]
    if not np.isclose(v_grid.spacing[0], stir.grid.spacing[2], rtol=1e-9, atol=0):
        raise GridMismatch("The output v-grid must share the STIR v spacing.")
    return v_grid.extents[0][0] - stir.grid.extents[2][0], v_grid.counts[0]


def render_mas(stir, wall_points, shift, v_grid=None):
    r"""Renders the LCT-space measurement of a shifted object by STIR lookup.

    Pixel ``p`` reads the STIR column at :math:`(w_x - \Delta x, w_y - \Delta y)` by
    bilinear interpolation, shifted by :math:`\Delta v` with linear interpolation.
    Samples outside the STIR extent read as zero.

    Args:
        stir (CanonicalSTIR): the STIR
        wall_points (array): world wall points of shape ``(..., 3)``
        shift (array[float]): :math:`(\Delta x, \Delta y, \Delta v)`
        v_grid (GridSpec): one-dimensional output :math:`v` grid with the STIR
            spacing; defaults to the STIR's own :math:`v` axis

    Returns:
        array: rendered columns of shape ``wall_points.shape[:-1] + (n_v,)``
    """
    wall_points = np.asarray(wall_points, dtype=np.float64)
    offset, n_out = _v_offset(stir, v_grid)
    origin = np.array([lo for lo, _ in stir.grid.extents])
    out = _render_pixels(
        stir.values,
        origin,
        np.array(stir.grid.spacing),
        np.ascontiguousarray(wall_points.reshape(-1, 3)),
        np.asarray(shift, dtype=np.float64),
        offset,
        n_out,
    )
    return out.reshape(wall_points.shape[:-1] + (n_out,))


@jit(nopython=True, nogil=True)
def _score_chunk(values, origin, spacing, v_refs, wall, measurement, states, eta):  # pragma: no cover
    n_obj = values.shape[0]
    n_pixels, n_v = measurement.shape
    m_norm = np.sqrt(np.sum(measurement * measurement))
    scores = np.zeros(states.shape[0])
    if m_norm == 0.0:
        return scores

    single = np.zeros((n_pixels, n_v))
    composite = np.zeros((n_pixels, n_v))
    shift = np.zeros(3)
    for k in range(states.shape[0]):
        composite[:] = 0.0
        valid = True
        for m in range(n_obj):
            z = states[k, 3 * m + 2]
            if z <= 0.0:
                valid = False
                break
            shift[0] = states[k, 3 * m]
            shift[1] = states[k, 3 * m + 1]
            shift[2] = z * z - v_refs[m]
            fv0 = -shift[2] / spacing[2]
            single[:] = 0.0
            for p in range(n_pixels):
                fx = (wall[p, 0] - shift[0] - origin[0]) / spacing[0]
                fy = (wall[p, 1] - shift[1] - origin[1]) / spacing[1]
                _render_into(single[p], values[m], fx, fy, fv0)
            s_norm = np.sqrt(np.sum(single * single))
            if s_norm == 0.0:
                continue
            w = np.sum(single * measurement) / (s_norm * m_norm)
            if w > 0.0:
                composite += w * single
        if not valid:
            continue
        c_norm = np.sqrt(np.sum(composite * composite))
        if c_norm == 0.0:
            continue
        base = np.sum(composite * measurement) / (c_norm * m_norm)
        if base > 0.0:
            scores[k] = base**eta
    return scores


def score_particles(stirs, wall_points, measurement, states, eta=4.0, workers=1):
    r"""Scores object-position hypotheses against one LCT-resampled measurement.

    Each row of ``states`` holds the centroids :math:`(x, y, z)` of ``M`` objects.
    Every object is rendered with :func:`render_mas`, weighted by the clamped
    normalized correlation of its unit-norm rendering with the measurement, and the
    weighted renderings are summed. The score of the composite is its normalized
    correlation with the measurement raised to ``eta``. Hypotheses with an object at
    :math:`z \leq 0` or an all-zero composite score zero.

    Args:
        stirs (list[CanonicalSTIR]): one STIR per object, all on the same grid
        wall_points (array): world wall points of shape ``(..., 3)``
        measurement (array): shape ``wall_points.shape[:-1] + (n_v,)`` on the STIR :math:`v` grid
        states (array): shape ``(K, 3M)``
        eta (float): score exponent
        workers (int): number of threads; particles are split into contiguous chunks

    Returns:
        array: ``K`` nonnegative scores
    """
    grid = stirs[0].grid
    if any(s.grid != grid for s in stirs):
        raise GridMismatch("Batched scoring needs all STIRs on one grid.")
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if states.shape[1] != 3 * len(stirs):
        raise GridMismatch(f"States of width {states.shape[1]} do not describe {len(stirs)} objects.")

    values = np.stack([s.values for s in stirs])
    origin = np.array([lo for lo, _ in grid.extents])
    spacing = np.array(grid.spacing)
    v_refs = np.array([s.v_ref for s in stirs])
    wall = np.ascontiguousarray(np.asarray(wall_points, dtype=np.float64).reshape(-1, 3))
    meas = np.ascontiguousarray(np.asarray(measurement, dtype=np.float64).reshape(wall.shape[0], -1))
    if meas.shape[1] != grid.counts[2]:
        raise GridMismatch("The measurement must lie on the STIR v grid.")

    if len(states) == 0:
        return np.zeros(0)

    def run(chunk):
        return _score_chunk(values, origin, spacing, v_refs, wall, meas, states[chunk], float(eta))

    return np.concatenate(parallel_map(run, chunk_slices(len(states), workers), workers))
