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
"""Shared fixtures for the Periscope tests"""
# pylint: disable=redefined-outer-name
import pytest
import numpy as np

from periscope.geometry import CameraModel, Pose
from periscope.lct import GridSpec
from periscope.simulator import patch_object, point_object

np.random.seed(137)

# defaults
TOL = 1e-3


@pytest.fixture(scope="session")
def tol():
    """Numerical tolerance for equality tests."""
    return TOL


@pytest.fixture(scope="session")
def camera():
    """A small retroreflective camera with 8x8 pixels and 2 cm bins"""
    return CameraModel.pinhole(
        8.0, (8, 8), n_bins=128, bin_width=0.04 / 299792458.0, pulse_sigma=0.0, falloff="retroreflective"
    )


@pytest.fixture(scope="session")
def pose():
    """A camera one meter above the wall, looking straight at it"""
    return Pose.looking_at_wall([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def stir_grid():
    """A coarse STIR grid for the small camera"""
    return GridSpec(((-0.8, 0.8), (-0.8, 0.8), (0.0, 2.56)), (33, 33, 129))


@pytest.fixture(scope="session")
def point():
    """A single unit-albedo point"""
    return point_object()


@pytest.fixture(scope="session")
def patch():
    """A 10 cm square patch"""
    return patch_object(size=0.1, spacing=0.02)
