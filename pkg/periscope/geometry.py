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
Geometry
========

.. currentmodule:: periscope.geometry

Rigid transforms, pinhole cameras, ray--wall intersection and plane fitting.

The relay wall is the plane :math:`z=0` of the world frame, and hidden objects
as well as the camera live at :math:`z>0`. Camera frames follow the pinhole
convention: the optical axis is :math:`+z`, and the central ray of pixel
:math:`(i, j)` has direction :math:`K^{-1}(i, j, 1)^T`.

Types
-----

.. autosummary::
    Pose
    CameraModel

Operations
----------

.. autosummary::
    intersect_rays
    project_points
    fit_plane

Rotations
---------

.. autosummary::
    rotation_matrix
    rotation_between
    wall_facing_rotation
    is_rotation

Code details
------------
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ._errors import BehindCamera, ConfigError, DegeneratePointSet, RayParallelToWall

__all__ = [
    "SPEED_OF_LIGHT",
    "WALL_FLIP",
    "Pose",
    "CameraModel",
    "intersect_rays",
    "project_points",
    "fit_plane",
    "rotation_matrix",
    "rotation_between",
    "wall_facing_rotation",
    "is_rotation",
]

SPEED_OF_LIGHT = 299792458.0
"""float: speed of light in meters per second"""

WALL_FLIP = np.diag([1.0, -1.0, -1.0])
"""array: half turn about :math:`x`; turns a camera looking along its :math:`+z` axis
into one looking down at the wall along world :math:`-z`"""

FALLOFF_POWERS = {"retroreflective": 2, "diffuse": 4}


def is_rotation(R, atol=1e-9):
    """Checks if a matrix is a proper rotation.

    Args:
        R (array): square matrix
        atol (float): absolute tolerance

    Returns:
        bool: ``True`` if ``R`` is orthonormal with unit determinant
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        return False
    return np.allclose(R @ R.T, np.identity(3), atol=atol, rtol=0) and np.isclose(
        np.linalg.det(R), 1.0, atol=atol, rtol=0
    )


def rotation_matrix(axis, angle):
    r"""Rotation by ``angle`` radians about ``axis``.

    Args:
        axis (array[float]): rotation axis, need not be normalized
        angle (float): angle in radians

    Returns:
        array: :math:`3\times 3` rotation matrix
    """
    axis = np.asarray(axis, dtype=np.float64)
    return Rotation.from_rotvec(angle * axis / np.linalg.norm(axis)).as_matrix()


def rotation_between(a, b):
    r"""Smallest rotation taking the direction ``a`` onto the direction ``b``.

    Args:
        a (array[float]): source direction
        b (array[float]): target direction

    Returns:
        array: :math:`3\times 3` rotation matrix ``R`` with ``R @ a`` parallel to ``b``
    """
    a = np.asarray(a, dtype=np.float64) / np.linalg.norm(a)
    b = np.asarray(b, dtype=np.float64) / np.linalg.norm(b)
    v = np.cross(a, b)
    s = np.linalg.norm(v)
    c = np.dot(a, b)

    if s < 1e-12:
        if c > 0:
            return np.identity(3)
        # antiparallel: half turn about any axis orthogonal to a
        ortho = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(ortho) < 1e-6:
            ortho = np.cross(a, [0.0, 1.0, 0.0])
        return rotation_matrix(ortho, np.pi)

    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.identity(3) + vx + vx @ vx * (1 - c) / s**2


def wall_facing_rotation(normal=(0.0, 0.0, 1.0)):
    r"""Camera-to-world rotation of a camera that sees the wall normal along ``normal``.

    The camera has no roll about the wall normal: the returned rotation is
    ``WALL_FLIP @ rotation_between(normal, z)``, which is also exactly what
    :func:`fit_plane` recovers from a wall point cloud.

    Args:
        normal (array[float]): wall normal expressed in camera coordinates, pointing
            away from the camera (positive :math:`z` component)

    Returns:
        array: :math:`3\times 3` camera-to-world rotation
    """
    normal = np.asarray(normal, dtype=np.float64)
    if normal[2] <= 0:
        raise ConfigError("The wall normal must have a positive z component in camera coordinates.")
    return WALL_FLIP @ rotation_between(normal, [0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Pose:
    r"""Camera-to-world rigid transform :math:`x_w = R x_c + t`.

    Args:
        rotation (array): :math:`3\times 3` rotation matrix
        translation (array): camera center in world coordinates (meters)
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not is_rotation(R):
            raise ConfigError("Pose rotation must be orthonormal with determinant +1.")
        if not np.all(np.isfinite(t)):
            raise ConfigError("Pose translation must be finite.")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def looking_at_wall(cls, position, normal=(0.0, 0.0, 1.0)):
        """Pose of a camera at ``position`` facing the wall without roll.

        Args:
            position (array[float]): camera center in world coordinates
            normal (array[float]): wall normal in camera coordinates

        Returns:
            Pose: the camera pose
        """
        return cls(wall_facing_rotation(normal), position)

    def inverse(self):
        """The world-to-camera transform as a :class:`Pose`."""
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def compose(self, other):
        """The transform ``self`` applied after ``other``."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def apply(self, points):
        """Maps points from camera to world coordinates.

        Args:
            points (array): array of shape ``(..., 3)``

        Returns:
            array: transformed points of the same shape
        """
        return np.asarray(points) @ self.rotation.T + self.translation

    def apply_inverse(self, points):
        """Maps points from world to camera coordinates."""
        return (np.asarray(points) - self.translation) @ self.rotation


@dataclass(frozen=True, eq=False)
class CameraModel:
    r"""Confocal time-of-flight camera.

    Args:
        intrinsics (array): :math:`3\times 3` pinhole matrix :math:`K` in pixels
        resolution (tuple[int]): pixel counts ``(n_x, n_y)``
        n_bins (int): temporal bins per histogram
        bin_width (float): seconds per temporal bin
        pulse_sigma (float): standard deviation of the Gaussian laser pulse in seconds
        falloff (str): ``"retroreflective"`` (:math:`1/r^2`) or ``"diffuse"`` (:math:`1/r^4`)
    """

    intrinsics: np.ndarray
    resolution: tuple
    n_bins: int
    bin_width: float
    pulse_sigma: float = 0.0
    falloff: str = "retroreflective"
    _inverse: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        K = np.array(self.intrinsics, dtype=np.float64)
        if K.shape != (3, 3):
            raise ConfigError("Camera intrinsics must be a 3x3 matrix.")
        K.setflags(write=False)
        object.__setattr__(self, "intrinsics", K)
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        object.__setattr__(self, "n_bins", int(self.n_bins))
        object.__setattr__(self, "_inverse", np.linalg.inv(K))

        if len(self.resolution) != 2 or min(self.resolution) < 1:
            raise ConfigError("Camera resolution must be a pair of positive pixel counts.")
        if self.n_bins < 2:
            raise ConfigError("Cameras need at least two temporal bins.")
        if not self.bin_width > 0:
            raise ConfigError("The temporal bin width must be positive.")
        if not self.pulse_sigma >= 0:
            raise ConfigError("The pulse width must be nonnegative.")
        if self.falloff not in FALLOFF_POWERS:
            raise ConfigError(f"Unknown falloff {self.falloff!r}; use one of {sorted(FALLOFF_POWERS)}.")

    @classmethod
    def pinhole(cls, focal, resolution, **kwargs):
        """Camera with square pixels and the principal point at the sensor center.

        Args:
            focal (float): focal length in pixels
            resolution (tuple[int]): pixel counts ``(n_x, n_y)``
            **kwargs: remaining :class:`CameraModel` fields

        Returns:
            CameraModel: the camera
        """
        n_x, n_y = resolution
        K = np.array([[focal, 0.0, (n_x - 1) / 2], [0.0, focal, (n_y - 1) / 2], [0.0, 0.0, 1.0]])
        return cls(K, resolution, **kwargs)

    @property
    def n_pixels(self):
        """int: number of pixels"""
        return self.resolution[0] * self.resolution[1]

    @property
    def bin_length(self):
        """float: round-trip path length covered by one temporal bin (meters)"""
        return SPEED_OF_LIGHT * self.bin_width

    @property
    def falloff_power(self):
        """int: exponent of the radiometric range falloff"""
        return FALLOFF_POWERS[self.falloff]

    @property
    def lct_exponent(self):
        """float: exponent of :math:`v` that turns this falloff into a point-mass weight"""
        return (self.falloff_power - 1) / 2

    def pixel_coordinates(self):
        """Homogeneous pixel coordinates of all pixel centers.

        Returns:
            array: shape ``(n_x, n_y, 3)``, entry ``(i, j)`` is ``(i, j, 1)``
        """
        n_x, n_y = self.resolution
        i, j = np.meshgrid(np.arange(n_x, dtype=np.float64), np.arange(n_y, dtype=np.float64), indexing="ij")
        return np.stack([i, j, np.ones_like(i)], axis=-1)

    def ray_directions(self):
        """Central ray directions of all pixels in camera coordinates (not normalized)."""
        return self.pixel_coordinates() @ self._inverse.T


def intersect_rays(camera, pose, return_range=False):
    r"""Intersects the central ray of every pixel with the wall :math:`z=0`.

    Args:
        camera (CameraModel): the camera
        pose (Pose): camera-to-world transform
        return_range (bool): if ``True``, also return the distance from the camera
            center to each wall point

    Returns:
        array or tuple[array, array]: wall points of shape ``(n_x, n_y, 3)``, and optionally
        the ranges of shape ``(n_x, n_y)``

    Raises:
        RayParallelToWall: if a pixel ray is parallel to the wall
        BehindCamera: if a wall intersection lies behind the camera
    """
    directions = camera.ray_directions() @ pose.rotation.T
    dz = directions[..., 2]
    if np.any(dz == 0):
        raise RayParallelToWall("A pixel ray is parallel to the wall plane.")

    s = -pose.translation[2] / dz
    if np.any(s <= 0):
        raise BehindCamera("The wall lies behind the camera for at least one pixel.")

    points = pose.translation + s[..., None] * directions
    # the plane equation holds exactly; remove rounding residue
    points[..., 2] = 0.0

    if return_range:
        return points, s * np.linalg.norm(directions, axis=-1)
    return points


def project_points(camera, pose, points):
    """Projects world points onto the image plane.

    Args:
        camera (CameraModel): the camera
        pose (Pose): camera-to-world transform
        points (array): world points of shape ``(..., 3)``

    Returns:
        array: pixel coordinates of shape ``(..., 2)``
    """
    homogeneous = pose.apply_inverse(points) @ camera.intrinsics.T
    return homogeneous[..., :2] / homogeneous[..., 2:]


def fit_plane(points):
    r"""Least-squares plane through a point cloud in camera coordinates.

    The plane normal is the smallest principal axis of the scatter matrix,
    signed to have a positive :math:`z` component.

    Args:
        points (array): points of shape ``(..., 3)``

    Returns:
        tuple[float, array, array]: the distance from the camera center to the plane,
        the rotation taking the plane normal onto :math:`+z`, and the rotated points
        translated onto :math:`z=0` (same shape as ``points``)

    Raises:
        DegeneratePointSet: for fewer than three points or collinear points
    """
    points = np.asarray(points, dtype=np.float64)
    flat = points.reshape(-1, 3)
    if flat.shape[0] < 3:
        raise DegeneratePointSet("Plane fitting needs at least three points.")

    centroid = flat.mean(axis=0)
    centered = flat - centroid
    eigvals, eigvecs = np.linalg.eigh(centered.T @ centered)
    if eigvals[2] <= 0 or eigvals[1] <= 1e-12 * eigvals[2]:
        raise DegeneratePointSet("Plane fitting needs non-collinear points.")

    normal = eigvecs[:, 0]
    if normal[2] < 0 or (normal[2] == 0 and normal @ centroid < 0):
        normal = -normal

    offset = normal @ centroid
    R = rotation_between(normal, [0.0, 0.0, 1.0])
    aligned = points @ R.T
    aligned[..., 2] -= offset
    return abs(offset), R, aligned
