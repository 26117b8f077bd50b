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
"""Tests for the SVG figures"""
# pylint: disable=no-self-use
import numpy as np

from periscope.lct import AlbedoVolume, GridSpec
from periscope.plotting import plot_density, plot_trajectories, plot_volume


class TestPlots:
    """Tests that figures are written and reproducible"""

    def test_trajectories(self, tmpdir):
        """Test that equal inputs give byte-identical files"""
        estimate = np.random.random((10, 2, 3))
        first, second = str(tmpdir.join("a.svg")), str(tmpdir.join("b.svg"))
        plot_trajectories(first, estimate, estimate + 0.01, title="track")
        plot_trajectories(second, estimate, estimate + 0.01, title="track")
        with open(first, "rb") as f, open(second, "rb") as g:
            content = f.read()
            assert content == g.read()
        assert b"<svg" in content

    def test_volume(self, tmpdir):
        """Test the maximum projection of a volume"""
        grid = GridSpec(((-0.2, 0.2), (-0.2, 0.2), (0.5, 0.9)), (5, 6, 7))
        path = tmpdir.join("volume.svg")
        plot_volume(str(path), AlbedoVolume(np.random.random(grid.shape), grid), axis=1)
        assert path.size() > 0

    def test_density(self, tmpdir):
        """Test the contour plot of a posterior density"""
        grid = GridSpec(((-0.5, 0.5), (-0.5, 0.5)), (21, 21))
        x, y = np.meshgrid(grid.axis(0), grid.axis(1), indexing="ij")
        path = tmpdir.join("density.svg")
        plot_density(str(path), np.exp(-(x**2 + y**2) / 0.02), grid, truth=[0.0, 0.0])
        assert path.size() > 0
