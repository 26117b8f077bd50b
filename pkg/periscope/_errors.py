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
"""
Errors and warnings
===================

.. currentmodule:: periscope._errors

All errors raised by Periscope derive from :class:`PeriscopeError` and from
:class:`ValueError`, so ``except ValueError`` keeps working for callers that
do not care about the finer categories. Each error carries a ``category``
(``"config"``, ``"data"`` or ``"numerical"``) which the command line interface
maps onto its exit code.

.. autosummary::
    PeriscopeError
    ConfigError
    RayParallelToWall
    BehindCamera
    DegeneratePointSet
    ExtentMismatch
    SingularDepth
    GridMismatch
    ObjectBehindWall
    InvalidValues
    LengthMismatch
    BoundsDimensionMismatch
    AllZeroWeights
    TooFewParticles
    EmptyCloud
    CorruptManifest
    ShapeMismatch
    MissingArray
    DigestMismatch
    FootprintOverflowWarning

Code details
------------
"""


class PeriscopeError(ValueError):
    """Base class of every error raised by Periscope."""

    category = "numerical"


class ConfigError(PeriscopeError):
    """Malformed or inconsistent configuration."""

    category = "config"


class RayParallelToWall(PeriscopeError):
    """A pixel ray never reaches the wall plane."""

    category = "data"


class BehindCamera(PeriscopeError):
    """The wall intersection of a pixel ray lies behind the camera."""

    category = "data"


class DegeneratePointSet(PeriscopeError):
    """Fewer than three points, or all points collinear."""

    category = "data"


class ExtentMismatch(ConfigError):
    """A resampling target reaches outside the source extent."""


class SingularDepth(ConfigError):
    """A depth grid touches u = 0."""


class GridMismatch(ConfigError):
    """Two grids that must agree do not."""


class ObjectBehindWall(ConfigError):
    """A scene point lies on or behind the wall plane."""


class InvalidValues(PeriscopeError):
    """Array values break a domain constraint, such as finiteness or lying on the wall plane."""

    category = "data"


class LengthMismatch(ConfigError):
    """Sequences that must have equal length do not."""


class BoundsDimensionMismatch(ConfigError):
    """Initialization bounds do not match the state dimension."""


class AllZeroWeights(PeriscopeError):
    """Every particle scored zero."""


class TooFewParticles(PeriscopeError):
    """Fewer particles than requested clusters."""


class EmptyCloud(PeriscopeError):
    """A sample cloud holds no samples."""


class CorruptManifest(PeriscopeError):
    """A manifest cannot be parsed or is missing required entries."""

    category = "data"


class ShapeMismatch(PeriscopeError):
    """An array file does not hold the shape declared in its manifest."""

    category = "data"


class MissingArray(PeriscopeError):
    """An array file referenced by a manifest does not exist."""

    category = "data"


class DigestMismatch(PeriscopeError):
    """Array contents do not match the digest stored in the manifest."""

    category = "data"


class FootprintOverflowWarning(UserWarning):
    """Part of an object's parabola footprint fell outside the STIR grid."""
