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
Python library
==============

.. currentmodule:: periscope

This is the top level module of Periscope, a library for tracking, localizing
and reconstructing hidden objects from the transient measurements of a moving
time-of-flight camera that looks at a relay wall.

Pipeline terminology
--------------------

Light-cone transform
    Resampling of confocal transients from time :math:`\tau` to :math:`v = (c\tau/2)^2`
    and of albedo from depth :math:`z` to :math:`u = z^2`, after which the
    measurement is a 3D convolution of the albedo with a parabola.

Canonical STIR
    The light-cone transformed response of an object at a reference position.
    A translated object produces a translated STIR, so hypotheses are rendered by
    lookup.

Motion-aided sampling
    A moving camera samples the STIR at wall points that change with every frame;
    the particle filters and the multi-frame reconstruction exploit these samples.

Top-level functions
-------------------

.. autosummary::
    simulate_sequence
    precompute_canonical_stir
    render_mas
    track
    localize
    accumulate
    backproject
    read_dataset
    write_dataset
    get_profile
    version
    about
"""
import platform
import sys

import dask
import matplotlib
import numba
import numpy
import scipy
import sklearn

from ._errors import PeriscopeError
from ._version import __version__
from .dataset import get_profile, read_dataset, read_stir, write_dataset, write_stir
from .geometry import CameraModel, Pose
from .lct import AlbedoVolume, GridSpec, LctCube, lct_forward
from .localization import localize
from .particle_filter import FilterConfig, ParticleSet
from .reconstruction import accumulate, backproject
from .simulator import Dataset, ObjectModel, generate_trajectory, simulate_sequence
from .stir import CanonicalSTIR, precompute_canonical_stir, render_mas
from .tracking import TrackConfig, track

__all__ = [
    "PeriscopeError",
    "CameraModel",
    "Pose",
    "GridSpec",
    "LctCube",
    "AlbedoVolume",
    "lct_forward",
    "ObjectModel",
    "Dataset",
    "generate_trajectory",
    "simulate_sequence",
    "CanonicalSTIR",
    "precompute_canonical_stir",
    "render_mas",
    "FilterConfig",
    "ParticleSet",
    "TrackConfig",
    "track",
    "localize",
    "accumulate",
    "backproject",
    "get_profile",
    "read_dataset",
    "write_dataset",
    "read_stir",
    "write_stir",
    "version",
    "about",
]


def version():
    r"""
    Get version number of Periscope

    Returns:
      str: The package version number
    """
    return __version__


def about():
    """Prints the versions of Periscope, Python and the numerical libraries it runs on."""
    print("Periscope: motion-aided non-line-of-sight imaging")
    print(f"Python version:      {sys.version.split()[0]}")
    print(f"Platform info:       {platform.platform()}")
    print(f"Periscope version:   {__version__}")
    for module in (numpy, scipy, numba, dask, sklearn, matplotlib):
        print(f"{module.__name__ + ' version:':<21}{module.__version__}")
