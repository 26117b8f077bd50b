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
Transient simulator
===================

.. currentmodule:: periscope.simulator

Brute-force confocal transient rendering, photon noise and sequence generation.

A wall point :math:`x_w` illuminated by a Gaussian pulse of width :math:`\sigma`
receives from a scene point :math:`p` at range :math:`r = |p - x_w|`

.. math::

    i(\tau) \mathrel{+}= \frac{\rho_p}{r^{k}}
    \exp\left(-\frac{(\tau - 2r/c)^2}{2\sigma^2}\right),

with :math:`k=2` for retroreflective and :math:`k=4` for diffuse objects. The
pulse is truncated at :math:`\pm 4\sigma`; a zero-width pulse is split linearly
between the two neighbouring temporal bins.

Scene description
-----------------

.. autosummary::
    ObjectModel
    Trajectory
    point_object
    patch_object
    mannequin_object
    load_object
    generate_trajectory

Measurements
------------

.. autosummary::
    FrameMeasurement
    NoiseConfig
    Dataset
    render_histograms
    render_transient_direct
    add_noise
    simulate_sequence

Pulse model in LCT space
------------------------

.. autosummary::
    lct_pulse_sigma
    lct_pulse_profile

Code details
------------
"""
# pylint: disable=too-many-arguments
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numba import jit

from ._errors import ConfigError, InvalidValues, LengthMismatch, ObjectBehindWall
from ._parallel import parallel_map
from .geometry import SPEED_OF_LIGHT, Pose, intersect_rays, wall_facing_rotation

__all__ = [
    "ObjectModel",
    "Trajectory",
    "FrameMeasurement",
    "NoiseConfig",
    "Dataset",
    "point_object",
    "patch_object",
    "mannequin_object",
    "load_object",
    "generate_trajectory",
    "render_histograms",
    "render_transient_direct",
    "add_noise",
    "simulate_sequence",
    "lct_pulse_sigma",
    "lct_pulse_profile",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """Rigid point-cloud object with its centroid at the origin.

    Args:
        points (array): point coordinates of shape ``(N, 3)`` in meters
        albedo (array): per-point albedo of shape ``(N,)``; defaults to ones
    """

    points: np.ndarray
    albedo: np.ndarray = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        albedo = np.ones(len(points)) if self.albedo is None else np.array(self.albedo, dtype=np.float64)
        if albedo.shape != (len(points),):
            raise ConfigError("Albedo must hold one value per point.")
        if len(points) == 0:
            raise ConfigError("An object needs at least one point.")
        if np.any(albedo < 0):
            raise ConfigError("Albedo must be nonnegative.")
        if not np.allclose(points.mean(axis=0), 0, atol=1e-9, rtol=0):
            raise ConfigError("Object points must be centered at the origin; use ObjectModel.centered.")
        points.setflags(write=False)
        albedo.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "albedo", albedo)

    @classmethod
    def centered(cls, points, albedo=None):
        """Object from arbitrary points, translated so their centroid is the origin."""
        points = np.array(points, dtype=np.float64).reshape(-1, 3)
        return cls(points - points.mean(axis=0), albedo)

    def __len__(self):
        return len(self.points)

    def placed(self, position):
        """Point coordinates with the centroid moved to ``position``."""
        return self.points + np.asarray(position, dtype=np.float64)


def point_object(albedo=1.0):
    """Single scatterer at the origin."""
    return ObjectModel(np.zeros((1, 3)), [albedo])


def patch_object(size=0.25, spacing=0.01, albedo=1.0):
    """Square planar patch parallel to the wall.

    Args:
        size (float or tuple[float]): side lengths in meters
        spacing (float): point spacing in meters
        albedo (float): albedo of every point

    Returns:
        ObjectModel: the patch
    """
    sx, sy = np.broadcast_to(size, (2,))
    nx = int(round(sx / spacing)) + 1
    ny = int(round(sy / spacing)) + 1
    x, y = np.meshgrid(np.linspace(-sx / 2, sx / 2, nx), np.linspace(-sy / 2, sy / 2, ny), indexing="ij")
    points = np.stack([x.ravel(), y.ravel(), np.zeros(x.size)], axis=-1)
    return ObjectModel.centered(points, np.full(len(points), albedo))


# (center, radii) of the body parts, standing along +y
_BODY = [
    ((0.0, 0.36, 0.0), (0.07, 0.08, 0.07)),
    ((0.0, 0.1, 0.0), (0.13, 0.18, 0.07)),
    ((-0.19, 0.1, 0.0), (0.035, 0.17, 0.035)),
    ((0.19, 0.1, 0.0), (0.035, 0.17, 0.035)),
    ((-0.06, -0.27, 0.0), (0.05, 0.2, 0.05)),
    ((0.06, -0.27, 0.0), (0.05, 0.2, 0.05)),
]


def mannequin_object(n_points=500, scale=1.0, seed=0):
    """Stylized human figure made of ellipsoid surfaces, standing parallel to the wall.

    Args:
        n_points (int): total number of surface points
        scale (float): isotropic size factor; ``1`` gives a figure about 0.8 m tall
        seed (int): seed of the surface sampling

    Returns:
        ObjectModel: the figure
    """
    rng = np.random.default_rng(seed)
    radii = np.array([r for _, r in _BODY])
    # surface area of an ellipsoid, Thomsen's approximation
    p = 1.6075
    a, b, c = radii.T
    areas = ((a**p * b**p + a**p * c**p + b**p * c**p) / 3) ** (1 / p)
    counts = np.floor(n_points * areas / areas.sum()).astype(int)
    counts[np.argmax(areas)] += n_points - counts.sum()

    parts = []
    for (center, r), n in zip(_BODY, counts):
        directions = rng.normal(size=(n, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        parts.append(np.asarray(center) + directions * np.asarray(r))
    return ObjectModel.centered(scale * np.concatenate(parts))


def load_object(path):
    """Reads an object from a CSV file with columns ``x, y, z`` and an optional ``albedo``.

    Args:
        path (str): file path; lines starting with ``#`` are ignored

    Returns:
        ObjectModel: the centered object
    """
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))
    if data.shape[1] not in (3, 4):
        raise ConfigError("Object files need three or four columns: x, y, z[, albedo].")
    albedo = data[:, 3] if data.shape[1] == 4 else None
    return ObjectModel.centered(data[:, :3], albedo)


@dataclass(frozen=True, eq=False)
class Trajectory:
    r"""Per-frame positions, and optionally orientations, sampled at a fixed rate.

    For objects, ``positions`` holds the world position of the centroid. For the
    camera, it holds the camera center and ``rotations`` the camera-to-world
    rotations (defaulting to a camera facing the wall squarely).

    Args:
        positions (array): shape ``(T, 3)`` in meters
        frame_rate (float): frames per second
        rotations (array): optional shape ``(T, 3, 3)``
    """

    positions: np.ndarray
    frame_rate: float = 30.0
    rotations: np.ndarray = None

    def __post_init__(self):
        positions = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(positions)):
            raise ConfigError("Trajectory positions must be finite.")
        if not self.frame_rate > 0:
            raise ConfigError("The frame rate must be positive.")
        object.__setattr__(self, "positions", positions)
        if self.rotations is not None:
            rotations = np.array(self.rotations, dtype=np.float64).reshape(-1, 3, 3)
            if len(rotations) != len(positions):
                raise LengthMismatch("A trajectory needs one rotation per position.")
            object.__setattr__(self, "rotations", rotations)

    @property
    def frame_count(self):
        """int: number of frames"""
        return len(self.positions)

    @property
    def timestamps(self):
        """array: frame times in seconds"""
        return np.arange(self.frame_count) / self.frame_rate

    def poses(self):
        """Camera poses of every frame.

        Returns:
            list[Pose]: one pose per frame
        """
        if self.rotations is None:
            R = wall_facing_rotation()
            return [Pose(R, t) for t in self.positions]
        return [Pose(R, t) for R, t in zip(self.rotations, self.positions)]


def _linear(start, velocity=(0.0, 0.0, 0.0), frames=30, frame_rate=30.0):
    t = np.arange(frames)[:, None] / frame_rate
    return np.asarray(start, dtype=np.float64) + t * np.asarray(velocity, dtype=np.float64)


def _circular(center, radius=0.1, period=2.0, frames=30, frame_rate=30.0):
    phase = 2 * np.pi * np.arange(frames) / (frame_rate * period)
    offsets = radius * np.stack([np.cos(phase), np.sin(phase), np.zeros(frames)], axis=-1)
    return np.asarray(center, dtype=np.float64) + offsets


def _grid(center, extent=(0.25, 0.25), shape=(10, 10)):
    nx, ny = shape
    xs = np.linspace(-extent[0] / 2, extent[0] / 2, nx)
    ys = np.linspace(-extent[1] / 2, extent[1] / 2, ny)
    waypoints = []
    for j, y in enumerate(ys):
        row = xs if j % 2 == 0 else xs[::-1]
        waypoints.extend((x, y, 0.0) for x in row)
    return np.asarray(center, dtype=np.float64) + np.array(waypoints)


def _random_walk(start, step=0.05, frames=30, seed=0):
    rng = np.random.default_rng(seed)
    steps = rng.normal(scale=step, size=(frames - 1, 3))
    walk = np.concatenate([np.zeros((1, 3)), np.cumsum(steps, axis=0)])
    return np.asarray(start, dtype=np.float64) + walk


def generate_trajectory(kind, frame_rate=30.0, tilt_step=0.0, tilt_seed=None, **params):
    r"""Parametric trajectories.

    ``kind`` selects the curve and its parameters:

    * ``"linear"``: ``start``, ``velocity`` (m/s), ``frames``
    * ``"circular"``: ``center``, ``radius``, ``period`` (s), ``frames``
    * ``"grid"``: ``center``, ``extent`` (m), ``shape``; a serpentine raster with one
      waypoint per frame, as in stop-motion capture
    * ``"random_walk"``: ``start``, ``step`` (per-axis std in m), ``frames``, ``seed``

    A nonzero ``tilt_step`` adds camera orientations: the wall normal seen by the
    camera performs a random walk in pitch and yaw with this per-frame std in
    radians, and never rolls.

    Args:
        kind (str): one of ``"linear"``, ``"circular"``, ``"grid"``, ``"random_walk"``
        frame_rate (float): frames per second
        tilt_step (float): per-frame std of the camera tilt random walk in radians
        tilt_seed (int): seed of the tilt walk; defaults to ``seed`` plus one
        **params: curve parameters

    Returns:
        Trajectory: the trajectory
    """
    if kind == "linear":
        positions = _linear(frame_rate=frame_rate, **params)
    elif kind == "circular":
        positions = _circular(frame_rate=frame_rate, **params)
    elif kind == "grid":
        positions = _grid(**params)
    elif kind == "random_walk":
        positions = _random_walk(**params)
    else:
        raise ConfigError(f"Unknown trajectory kind {kind!r}.")

    rotations = None
    if tilt_step > 0:
        if tilt_seed is None:
            tilt_seed = params.get("seed", 0) + 1
        rng = np.random.default_rng(tilt_seed)
        tilts = np.cumsum(rng.normal(scale=tilt_step, size=(len(positions), 2)), axis=0)
        tilts -= tilts[0]
        normals = np.stack([np.tan(tilts[:, 0]), np.tan(tilts[:, 1]), np.ones(len(tilts))], axis=-1)
        rotations = np.array([wall_facing_rotation(n) for n in normals])

    return Trajectory(positions, frame_rate, rotations)


@dataclass(frozen=True)
class NoiseConfig:
    """Photon noise model.

    Args:
        signal_scale (float): expected photons per unit of model intensity
        ambient_rate (float): ambient photons per bin
        dark_rate (float): dark counts per bin
        seed (int): master seed
        range_sigma (float): std of the simulated depth noise of wall point clouds (m)
        peak_photons (float): if set, :func:`simulate_sequence` rescales ``signal_scale``
            so the brightest noiseless bin of the sequence expects this many photons
    """

    signal_scale: float = 1.0
    ambient_rate: float = 0.0
    dark_rate: float = 0.0
    seed: int = 0
    range_sigma: float = 0.005
    peak_photons: float = None

    def __post_init__(self):
        if min(self.signal_scale, self.ambient_rate, self.dark_rate, self.range_sigma) < 0:
            raise ConfigError("Noise rates must be nonnegative.")


@dataclass(frozen=True, eq=False)
class FrameMeasurement:
    """One LiDAR frame.

    Args:
        pose (Pose): camera pose
        wall_points (array): world wall points of shape ``(n_x, n_y, 3)``
        histogram (array): photon counts of shape ``(n_x, n_y, n_t)``
        timestamp (float): seconds since the first frame
        point_cloud (array): wall points in camera coordinates, shape ``(n_x, n_y, 3)``
    """

    pose: Pose
    wall_points: np.ndarray
    histogram: np.ndarray
    timestamp: float = 0.0
    point_cloud: np.ndarray = None

    def __post_init__(self):
        histogram = np.asarray(self.histogram)
        wall_points = np.asarray(self.wall_points)
        if not np.all(np.isfinite(histogram)) or np.any(histogram < 0):
            raise InvalidValues("Histogram counts must be finite and nonnegative.")
        if wall_points.shape != histogram.shape[:2] + (3,):
            raise InvalidValues("Wall points must hold one 3-vector per histogram pixel.")
        if np.any(np.abs(wall_points[..., 2]) > 1e-6):
            raise InvalidValues("Wall points must lie on the plane z = 0.")
        object.__setattr__(self, "histogram", histogram)
        object.__setattr__(self, "wall_points", wall_points)


@dataclass(eq=False)
class Dataset:
    """A sequence of frames with its sensor and, when simulated, ground truth.

    Args:
        camera (CameraModel): the sensor
        frames (list[FrameMeasurement]): frames in capture order
        truth (dict[str, array]): ``"objects"`` of shape ``(M, T, 3)`` and ``"camera"``
            of shape ``(T, 3)`` when known
        metadata (dict): free-form JSON-serializable description (profile, seeds, grids)
    """

    camera: object
    frames: list
    truth: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def frame_count(self):
        """int: number of frames"""
        return len(self.frames)

    @property
    def frame_rate(self):
        """float: frames per second, from metadata or timestamps"""
        if "frame_rate" in self.metadata:
            return float(self.metadata["frame_rate"])
        if len(self.frames) > 1 and self.frames[1].timestamp > self.frames[0].timestamp:
            return 1.0 / (self.frames[1].timestamp - self.frames[0].timestamp)
        return 30.0


@jit(nopython=True, nogil=True)
def _render_histograms(wall, points, albedo, n_bins, bin_length, sigma_bins, power):  # pragma: no cover
    n_pixels = wall.shape[0]
    out = np.zeros((n_pixels, n_bins))
    reach = 4.0 * sigma_bins
    for p in range(n_pixels):
        for n in range(points.shape[0]):
            dx = points[n, 0] - wall[p, 0]
            dy = points[n, 1] - wall[p, 1]
            dz = points[n, 2] - wall[p, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            w = albedo[n] / r**power
            center = 2.0 * r / bin_length

            if sigma_bins == 0.0:
                i0 = int(np.floor(center))
                f = center - i0
                if 0 <= i0 < n_bins:
                    out[p, i0] += w * (1.0 - f)
                if 0 <= i0 + 1 < n_bins:
                    out[p, i0 + 1] += w * f
            else:
                lo = max(int(np.ceil(center - reach)), 0)
                hi = min(int(np.floor(center + reach)), n_bins - 1)
                for i in range(lo, hi + 1):
                    d = (i - center) / sigma_bins
                    out[p, i] += w * np.exp(-0.5 * d * d)
    return out


def render_histograms(points, albedo, wall_points, camera):
    """Noiseless transients of one point cloud at arbitrary wall points.

    Args:
        points (array): world points of shape ``(N, 3)``
        albedo (array): per-point albedo
        wall_points (array): shape ``(..., 3)``
        camera (CameraModel): provides bins, pulse width and falloff

    Returns:
        array: histograms of shape ``wall_points.shape[:-1] + (n_bins,)``
    """
    points = np.asarray(points, dtype=np.float64)
    if np.any(points[:, 2] <= 0):
        raise ObjectBehindWall("Scene points must lie in front of the wall (z > 0).")

    wall = np.ascontiguousarray(np.asarray(wall_points, dtype=np.float64).reshape(-1, 3))
    out = _render_histograms(
        wall,
        np.ascontiguousarray(points),
        np.ascontiguousarray(albedo, dtype=np.float64),
        camera.n_bins,
        camera.bin_length,
        camera.pulse_sigma / camera.bin_width,
        float(camera.falloff_power),
    )
    return out.reshape(np.shape(wall_points)[:-1] + (camera.n_bins,))


def render_transient_direct(objects, camera, pose, timestamp=0.0):
    """Noiseless confocal frame of a set of shifted objects.

    Args:
        objects (list[tuple[ObjectModel, array]]): objects with the world position of
            their centroids
        camera (CameraModel): the camera
        pose (Pose): camera pose
        timestamp (float): frame time in seconds

    Returns:
        FrameMeasurement: the noiseless frame

    Raises:
        ObjectBehindWall: if a shifted point has :math:`z \\leq 0`
    """
    wall_points = intersect_rays(camera, pose)
    histogram = np.zeros(camera.resolution + (camera.n_bins,))
    for obj, shift in objects:
        histogram = histogram + render_histograms(obj.placed(shift), obj.albedo, wall_points, camera)
    return FrameMeasurement(pose, wall_points, histogram, timestamp, pose.apply_inverse(wall_points))


def add_noise(frame, cfg, rng=None):
    """Replaces every bin by a Poisson draw.

    The mean of a bin is ``signal_scale * value + ambient_rate + dark_rate``.

    Args:
        frame (FrameMeasurement): noiseless frame
        cfg (NoiseConfig): noise parameters
        rng (numpy.random.Generator): random stream; defaults to one seeded with ``cfg.seed``

    Returns:
        FrameMeasurement: the noisy frame
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    lam = cfg.signal_scale * np.asarray(frame.histogram, dtype=np.float64) + cfg.ambient_rate + cfg.dark_rate
    counts = rng.poisson(lam).astype(np.float64)
    return replace(frame, histogram=counts)


def _noisy_point_cloud(point_cloud, sigma, rng):
    """Perturbs camera-frame wall points along their rays."""
    ranges = np.linalg.norm(point_cloud, axis=-1, keepdims=True)
    noise = rng.normal(scale=sigma, size=ranges.shape)
    return point_cloud * (1 + noise / ranges)


def simulate_sequence(scene, camera, camera_traj, cfg=None, workers=1, metadata=None):
    """Simulates a sequence of frames of moving objects seen by a moving camera.

    Frame ``t`` draws its photon noise from ``default_rng([seed, t, 0])`` and its
    point-cloud noise from ``default_rng([seed, t, 1])``, so the output does not
    depend on ``workers``.

    Args:
        scene (list[tuple[ObjectModel, Trajectory]]): objects and their trajectories
        camera (CameraModel): the camera
        camera_traj (Trajectory): camera trajectory
        cfg (NoiseConfig): noise model; ``None`` gives noiseless frames
        workers (int): number of threads used to render frames
        metadata (dict): extra entries for the dataset metadata

    Returns:
        Dataset: frames with float32 arrays and ground truth

    Raises:
        LengthMismatch: if the trajectories have different frame counts
    """
    T = camera_traj.frame_count
    if any(traj.frame_count != T for _, traj in scene):
        raise LengthMismatch("All trajectories must have the same number of frames.")

    poses = camera_traj.poses()
    timestamps = camera_traj.timestamps

    def render(t):
        objects = [(obj, traj.positions[t]) for obj, traj in scene]
        return render_transient_direct(objects, camera, poses[t], timestamps[t])

    frames = parallel_map(render, range(T), workers)

    if cfg is not None:
        if cfg.peak_photons is not None:
            peak = max(float(np.max(f.histogram)) for f in frames)
            cfg = replace(cfg, signal_scale=cfg.peak_photons / peak if peak > 0 else 0.0)
            logger.debug("signal_scale=%.6g calibrated for peak_photons=%g", cfg.signal_scale, cfg.peak_photons)

        noisy = []
        for t, frame in enumerate(frames):
            frame = add_noise(frame, cfg, np.random.default_rng([cfg.seed, t, 0]))
            cloud = _noisy_point_cloud(frame.point_cloud, cfg.range_sigma, np.random.default_rng([cfg.seed, t, 1]))
            noisy.append(replace(frame, point_cloud=cloud))
        frames = noisy

    frames = [
        replace(
            f,
            histogram=f.histogram.astype(np.float32),
            wall_points=f.wall_points.astype(np.float32),
            point_cloud=f.point_cloud.astype(np.float32),
        )
        for f in frames
    ]

    meta = {"frame_rate": camera_traj.frame_rate}
    if cfg is not None:
        meta.update(
            seed=int(cfg.seed),
            signal_scale=float(cfg.signal_scale),
            ambient_rate=float(cfg.ambient_rate),
            dark_rate=float(cfg.dark_rate),
            range_sigma=float(cfg.range_sigma),
        )
    meta.update(metadata or {})

    truth = {
        "objects": np.array([traj.positions for _, traj in scene], dtype=np.float32).reshape(len(scene), T, 3),
        "camera": camera_traj.positions.astype(np.float32),
    }
    logger.info("simulated %d frames of %d objects", T, len(scene))
    return Dataset(camera, frames, truth, meta)


def lct_pulse_sigma(pulse_sigma, mu):
    r"""Width of the laser pulse after the light-cone transform.

    A Gaussian of std :math:`\sigma` in :math:`\tau` becomes, to first order, a
    Gaussian of std :math:`\sigma' = \sigma c \sqrt{\mu'}` in :math:`v` around
    :math:`\mu' = (x - x')^2 + (y - y')^2 + z'^2`.

    Args:
        pulse_sigma (float): pulse std in seconds
        mu (float or array): center :math:`\mu'` in square meters

    Returns:
        float or array: :math:`\sigma'` in square meters
    """
    return pulse_sigma * SPEED_OF_LIGHT * np.sqrt(mu)


def lct_pulse_profile(v, mu, pulse_sigma):
    r"""Unnormalized depth-dependent Gaussian pulse in :math:`v`.

    Args:
        v (array): :math:`v` coordinates in square meters
        mu (float): pulse center :math:`\mu'`
        pulse_sigma (float): pulse std in seconds

    Returns:
        array: :math:`\exp(-(v - \mu')^2 / 2\sigma'^2)`
    """
    s = lct_pulse_sigma(pulse_sigma, mu)
    return np.exp(-((np.asarray(v) - mu) ** 2) / (2 * s**2))
