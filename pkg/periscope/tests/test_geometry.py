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
"""Tests for rigid transforms, ray casting and plane fitting"""
# pylint: disable=no-self-use
import pytest
import numpy as np

from periscope._errors import BehindCamera, ConfigError, DegeneratePointSet, RayParallelToWall
from periscope.geometry import (
    WALL_FLIP,
    CameraModel,
    Pose,
    fit_plane,
    intersect_rays,
    is_rotation,
    project_points,
    rotation_between,
    rotation_matrix,
    wall_facing_rotation,
)


def unit_camera(resolution=(3, 3)):
    """Pinhole camera with unit focal length"""
    return CameraModel.pinhole(1.0, resolution, n_bins=16, bin_width=1e-10)


class TestRotations:
    """Tests for the rotation helpers"""

    @pytest.mark.parametrize("angle", [0.1, 1.0, np.pi / 2, 3.0])
    def test_rotation_matrix_is_rotation(self, angle):
        """Test that rotation_matrix returns proper rotations"""
        R = rotation_matrix(np.random.normal(size=3), angle)
        assert is_rotation(R)

    def test_reflection_is_not_rotation(self):
        """Test that a reflection is rejected"""
        assert not is_rotation(np.diag([1.0, 1.0, -1.0]))
        assert not is_rotation(np.identity(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_rotation_between(self, seed):
        """Test that rotation_between maps one direction onto the other"""
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(2, 3))
        R = rotation_between(a, b)
        assert is_rotation(R)
        assert np.allclose(R @ a / np.linalg.norm(a), b / np.linalg.norm(b), atol=1e-12)

    @pytest.mark.parametrize("a", [[0, 0, 1.0], [1.0, 0, 0], [0.3, -0.2, 0.9]])
    def test_rotation_between_antiparallel(self, a):
        """Test the half turn for antiparallel directions"""
        a = np.array(a)
        R = rotation_between(a, -a)
        assert is_rotation(R)
        assert np.allclose(R @ a, -a, atol=1e-12)

    def test_wall_facing_rotation(self):
        """Test that the wall normal is mapped onto world -z"""
        n = np.array([0.2, -0.1, 1.0])
        R = wall_facing_rotation(n)
        assert is_rotation(R)
        assert np.allclose(R @ n / np.linalg.norm(n), [0, 0, -1], atol=1e-12)
        assert np.allclose(wall_facing_rotation(), WALL_FLIP)

    def test_wall_facing_rotation_rejects_backward_normal(self):
        """Test that a normal pointing at the camera is rejected"""
        with pytest.raises(ConfigError, match="positive z"):
            wall_facing_rotation([0, 0, -1.0])


class TestPose:
    """Tests for the Pose type"""

    def test_invalid_rotation(self):
        """Test that a non-orthonormal rotation is rejected"""
        with pytest.raises(ConfigError, match="orthonormal"):
            Pose(2 * np.identity(3), np.zeros(3))

    def test_reflection_rejected(self):
        """Test that a reflection is not a valid pose rotation"""
        with pytest.raises(ConfigError):
            Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    def test_inverse_composition(self):
        """Test that a pose composed with its inverse is the identity"""
        p = Pose(rotation_matrix([1.0, 2.0, 3.0], 0.7), [0.1, -0.4, 1.2])
        q = p.compose(p.inverse())
        assert np.allclose(q.rotation, np.identity(3), atol=1e-9)
        assert np.allclose(q.translation, 0, atol=1e-9)

    def test_apply_round_trip(self):
        """Test that apply_inverse undoes apply"""
        p = Pose(rotation_matrix([0.0, 1.0, 0.0], 0.3), [0.5, 0.0, 2.0])
        x = np.random.normal(size=(10, 3))
        assert np.allclose(p.apply_inverse(p.apply(x)), x, atol=1e-12)

    def test_arrays_are_read_only(self):
        """Test that pose arrays cannot be modified"""
        p = Pose.looking_at_wall([0, 0, 1.0])
        with pytest.raises(ValueError):
            p.translation[0] = 1.0


class TestCameraModel:
    """Tests for the camera model"""

    def test_pinhole_center_ray(self):
        """Test that the central pixel of an odd sensor looks along the optical axis"""
        rays = unit_camera().ray_directions()
        assert np.allclose(rays[1, 1], [0, 0, 1])
        assert np.allclose(rays[2, 1], [1, 0, 1])

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"n_bins": 1, "bin_width": 1e-10}, "two temporal bins"),
            ({"n_bins": 8, "bin_width": 0.0}, "bin width"),
            ({"n_bins": 8, "bin_width": 1e-10, "pulse_sigma": -1.0}, "pulse width"),
            ({"n_bins": 8, "bin_width": 1e-10, "falloff": "lambertian"}, "Unknown falloff"),
        ],
    )
    def test_invalid_camera(self, kwargs, match):
        """Test that invalid cameras are rejected"""
        with pytest.raises(ConfigError, match=match):
            CameraModel.pinhole(1.0, (3, 3), **kwargs)

    @pytest.mark.parametrize("falloff, power, exponent", [("retroreflective", 2, 0.5), ("diffuse", 4, 1.5)])
    def test_falloff(self, falloff, power, exponent):
        """Test the falloff power and light-cone exponent"""
        cam = CameraModel.pinhole(1.0, (3, 3), n_bins=8, bin_width=1e-10, falloff=falloff)
        assert cam.falloff_power == power
        assert cam.lct_exponent == exponent


class TestIntersectRays:
    """Tests for ray casting onto the wall"""

    def test_center_pixel(self):
        """Test that the central pixel of a camera above the origin hits the origin"""
        points = intersect_rays(unit_camera(), Pose.looking_at_wall([0, 0, 1.0]))
        assert np.allclose(points[1, 1], 0)
        assert np.all(points[..., 2] == 0)

    def test_off_axis_pixel_and_range(self):
        """Test an off-axis pixel and its range"""
        points, ranges = intersect_rays(unit_camera(), Pose.looking_at_wall([0, 0, 1.0]), return_range=True)
        assert np.allclose(points[2, 1], [1, 0, 0])
        assert np.allclose(points[1, 2], [0, -1, 0])
        assert np.isclose(ranges[2, 1], np.sqrt(2))
        assert np.isclose(ranges[1, 1], 1.0)

    def test_translation(self):
        """Test that translating the camera translates the wall points"""
        cam = unit_camera((4, 5))
        a = intersect_rays(cam, Pose.looking_at_wall([0, 0, 1.0]))
        b = intersect_rays(cam, Pose.looking_at_wall([0.3, 0, 1.0]))
        assert np.allclose(b - a, [0.3, 0, 0])

    def test_rotation_about_z(self):
        """Test that rotating the camera about the wall normal rotates the wall points"""
        cam = unit_camera((4, 5))
        Rz = rotation_matrix([0, 0, 1.0], np.pi / 2)
        a = intersect_rays(cam, Pose(WALL_FLIP, [0, 0, 1.0]))
        b = intersect_rays(cam, Pose(Rz @ WALL_FLIP, [0, 0, 1.0]))
        assert np.allclose(b, a @ Rz.T, atol=1e-12)

    def test_parallel_ray(self):
        """Test that a ray parallel to the wall is detected"""
        R = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]])
        with pytest.raises(RayParallelToWall):
            intersect_rays(unit_camera((1, 1)), Pose(R, [0, 0, 1.0]))

    def test_behind_camera(self):
        """Test that a camera facing away from the wall is detected"""
        with pytest.raises(BehindCamera):
            intersect_rays(unit_camera(), Pose(np.identity(3), [0, 0, 1.0]))

    def test_projection_recovers_pixels(self):
        """Test that projecting the wall points recovers the pixel coordinates"""
        cam = CameraModel.pinhole(9.0, (10, 10), n_bins=16, bin_width=1e-10)
        pose = Pose(wall_facing_rotation([0.1, 0.2, 1.0]) @ rotation_matrix([0, 0, 1.0], 0.4), [0.2, -0.1, 1.3])
        pixels = project_points(cam, pose, intersect_rays(cam, pose))
        assert np.allclose(pixels, cam.pixel_coordinates()[..., :2], atol=1e-6, rtol=0)


class TestFitPlane:
    """Tests for plane fitting"""

    def test_fronto_parallel(self):
        """Test a cloud at constant camera depth"""
        x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 4))
        points = np.stack([x, y, np.full_like(x, 1.5)], axis=-1)
        height, R, aligned = fit_plane(points)
        assert np.isclose(height, 1.5)
        assert np.allclose(R, np.identity(3))
        assert aligned.shape == points.shape
        assert np.allclose(aligned[..., 2], 0, atol=1e-12)

    def test_tilted_plane(self):
        """Test that a plane tilted about x is brought back to z = 0"""
        tilt = rotation_matrix([1.0, 0, 0], np.pi / 6)
        x, y = np.meshgrid(np.linspace(-1, 1, 6), np.linspace(-1, 1, 6))
        flat = np.stack([x.ravel(), y.ravel(), np.ones(36)], axis=-1)
        points = flat @ tilt.T
        height, R, aligned = fit_plane(points)
        assert np.isclose(height, 1.0)
        assert np.allclose(R @ tilt, np.identity(3), atol=1e-9)
        assert np.max(np.abs(aligned[:, 2])) < 1e-9

    def test_recovers_camera_pose(self):
        """Test that fitting the wall cloud recovers height and rotation of a rollless camera"""
        cam = CameraModel.pinhole(9.0, (10, 10), n_bins=16, bin_width=1e-10)
        pose = Pose.looking_at_wall([0.3, -0.2, 1.2], normal=[0.15, -0.1, 1.0])
        wall = intersect_rays(cam, pose)
        height, R, aligned = fit_plane(pose.apply_inverse(wall))
        assert np.isclose(height, 1.2)
        assert np.allclose(WALL_FLIP @ R, pose.rotation, atol=1e-9)
        world = aligned @ WALL_FLIP.T + [0.3, -0.2, 0.0]
        assert np.allclose(world, wall, atol=1e-9)

    def test_noisy_normal(self):
        """Test that millimeter noise leaves the normal within half a degree"""
        rng = np.random.default_rng(3)
        x, y = np.meshgrid(np.linspace(-0.5, 0.5, 10), np.linspace(-0.5, 0.5, 10))
        points = np.stack([x.ravel(), y.ravel(), np.ones(100)], axis=-1)
        points += rng.normal(scale=1e-3, size=points.shape)
        _, R, _ = fit_plane(points)
        normal = R.T @ [0, 0, 1.0]
        assert np.degrees(np.arccos(normal[2])) < 0.5

    def test_permutation_invariance(self):
        """Test that the fit does not depend on point order"""
        points = np.random.normal(size=(20, 3)) * [1, 1, 0.01] + [0, 0, 2.0]
        h1, R1, _ = fit_plane(points)
        h2, R2, _ = fit_plane(points[::-1])
        assert np.isclose(h1, h2)
        assert np.allclose(R1, R2)

    @pytest.mark.parametrize(
        "points",
        [np.zeros((2, 3)), np.outer(np.arange(5.0), [1.0, 2.0, 3.0]) + [0, 0, 1.0]],
    )
    def test_degenerate(self, points):
        """Test that too few or collinear points are rejected"""
        with pytest.raises(DegeneratePointSet):
            fit_plane(points)
