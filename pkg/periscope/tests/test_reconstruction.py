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
"""Tests for multi-frame fusion and backprojection"""
# pylint: disable=no-self-use,redefined-outer-name
from dataclasses import replace

import pytest
import numpy as np

from periscope._errors import EmptyCloud, GridMismatch, InvalidValues
from periscope.lct import AlbedoVolume, GridSpec
from periscope.reconstruction import (
    SampleCloud,
    accumulate,
    backproject,
    baseline_argmax_track,
    default_v_grid,
    lateral_fwhm,
    threshold_points,
    volume_centroid,
)
from periscope.simulator import Dataset, NoiseConfig, generate_trajectory, simulate_sequence

VOXELS = GridSpec(((-0.2, 0.2), (-0.2, 0.2), (0.4, 0.8)), (21, 21, 21))


@pytest.fixture(scope="module")
def static_point(point, camera):
    """A point at (0, 0, 0.6) seen from a 2x2 raster of camera positions"""
    cam = generate_trajectory("grid", center=(0.0, 0.0, 1.0), extent=(0.2, 0.2), shape=(2, 2))
    obj = generate_trajectory("linear", start=(0.0, 0.0, 0.6), frames=cam.frame_count)
    return simulate_sequence([(point, obj)], camera, cam)


class TestSampleCloud:
    """Tests for the fused sample container"""

    def test_column_shape(self):
        """Test that columns must match the v grid"""
        v_grid = GridSpec(((0, 1),), (5,))
        with pytest.raises(GridMismatch):
            SampleCloud(np.zeros((2, 3)), np.zeros((2, 4)), v_grid)

    def test_off_wall(self):
        """Test that samples must lie on the wall"""
        v_grid = GridSpec(((0, 1),), (5,))
        with pytest.raises(InvalidValues, match="z = 0"):
            SampleCloud(np.ones((2, 3)), np.zeros((2, 5)), v_grid)

    def test_default_v_grid(self, camera):
        """Test that the default v grid spans the histogram range"""
        v_grid = default_v_grid(camera)
        assert v_grid.counts == (512,)
        assert np.isclose(v_grid.extents[0][1], 2.56**2)


class TestAccumulate:
    """Tests for multi-frame fusion"""

    def test_sample_count(self, static_point):
        """Test that distinct camera positions contribute distinct samples"""
        cloud = accumulate(static_point)
        assert len(cloud) == 4 * 64
        assert cloud.exponent == 0.5
        assert cloud.falloff_power == 2

    def test_duplicates_are_averaged(self, static_point):
        """Test that repeated wall locations are fused"""
        first = static_point.frames[0]
        twice = Dataset(static_point.camera, [first, first])
        single = accumulate(Dataset(static_point.camera, [first]))
        fused = accumulate(twice)
        assert len(fused) == 64
        assert np.allclose(fused.columns, single.columns)
        assert np.allclose(fused.wall_points, np.asarray(first.wall_points).reshape(-1, 3))


    def test_noise_averages_out(self, point, camera):
        """Test that fusing N frames of a static scene shrinks the photon noise like 1/sqrt(N)"""
        cam = generate_trajectory("linear", start=(0.0, 0.0, 1.0), frames=16)
        obj = generate_trajectory("linear", start=(0.0, 0.0, 0.6), frames=16)
        noise = NoiseConfig(signal_scale=200.0, ambient_rate=1.0, seed=5)
        data = simulate_sequence([(point, obj)], camera, cam, noise)

        clean = simulate_sequence([(point, obj)], camera, cam).frames[0]
        expected = replace(clean, histogram=200.0 * clean.histogram + 1.0)
        reference = accumulate(Dataset(camera, [expected])).columns

        def rms(n):
            fused = accumulate(Dataset(camera, data.frames[:n]))
            assert len(fused) == 64
            return np.sqrt(np.mean((fused.columns - reference) ** 2))

        assert 1.6 < rms(1) / rms(4) < 2.5
        assert 1.6 < rms(4) / rms(16) < 2.5


class TestBackproject:
    """Tests for filtered backprojection"""

    @pytest.fixture(scope="class")
    def volume(self, static_point):
        """Backprojection of the static point"""
        return backproject(accumulate(static_point), VOXELS)

    def test_peak_location(self, volume):
        """Test that the brightest voxel lies at the point"""
        peak = VOXELS.points()[np.argmax(volume.values)]
        assert np.linalg.norm(peak - [0.0, 0.0, 0.6]) < 0.05

    def test_nonnegative(self, volume):
        """Test that the filtered volume is clamped"""
        assert np.all(volume.values >= 0)
        assert volume.values.max() > 0

    def test_workers(self, static_point, volume):
        """Test that slabs over threads give the same volume"""
        again = backproject(accumulate(static_point), VOXELS, workers=3)
        assert np.array_equal(again.values, volume.values)

    def test_centroid(self, volume):
        """Test that the thresholded centroid is near the point"""
        assert np.linalg.norm(volume_centroid(volume, 0.8) - [0.0, 0.0, 0.6]) < 0.05

    def test_empty_cloud(self):
        """Test that an empty cloud cannot be backprojected"""
        cloud = SampleCloud(np.zeros((0, 3)), np.zeros((0, 5)), GridSpec(((0, 1),), (5,)))
        with pytest.raises(EmptyCloud):
            backproject(cloud, VOXELS)

    def test_grid_dimension(self, static_point):
        """Test that the voxel grid needs three axes"""
        with pytest.raises(GridMismatch):
            backproject(accumulate(static_point), GridSpec(((0, 1), (0, 1)), (2, 2)))


def test_baseline_argmax_track(point, camera):
    """Test the per-frame backprojection tracker on a moving point"""
    obj = generate_trajectory("linear", start=(-0.05, 0.0, 0.6), velocity=(1.5, 0.0, 0.0), frames=3)
    cam = generate_trajectory("linear", start=(0.0, 0.0, 1.0), frames=3)
    data = simulate_sequence([(point, obj)], camera, cam)
    estimates = baseline_argmax_track(data, VOXELS)
    assert estimates.shape == (3, 3)
    assert np.all(np.linalg.norm(estimates - data.truth["objects"][0], axis=1) < 0.08)


class TestVolumeSummaries:
    """Tests for volume statistics"""

    grid = GridSpec(((-0.5, 0.5), (-0.5, 0.5), (0.5, 1.5)), (101, 11, 11))

    def test_fwhm(self):
        """Test the width of a Gaussian blob"""
        x = self.grid.axis(0)
        values = np.zeros(self.grid.shape)
        values[:, 5, 5] = np.exp(-(x**2) / (2 * 0.05**2))
        width = lateral_fwhm(AlbedoVolume(values, self.grid), axis=0)
        assert np.isclose(width, 2 * np.sqrt(2 * np.log(2)) * 0.05, rtol=0.01)

    def test_threshold_points(self):
        """Test thresholding and the weighted centroid"""
        values = np.zeros(self.grid.shape)
        values[50, 5, 5] = 1.0
        values[60, 5, 5] = 0.6
        values[0, 0, 0] = 0.1
        volume = AlbedoVolume(values, self.grid)
        points, weights = threshold_points(volume, 0.5)
        assert len(points) == 2
        assert np.allclose(weights, [1.0, 0.6])
        assert np.allclose(volume_centroid(volume, 0.5), [0.6 * 0.1 / 1.6, 0.0, 1.0])

    def test_empty_volume(self):
        """Test that an empty volume has no points and a NaN centroid"""
        volume = AlbedoVolume(np.zeros(self.grid.shape), self.grid)
        assert len(threshold_points(volume)[0]) == 0
        assert np.all(np.isnan(volume_centroid(volume)))
