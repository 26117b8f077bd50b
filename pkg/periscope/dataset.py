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
Datasets, profiles and metrics
==============================

.. currentmodule:: periscope.dataset

On-disk formats
---------------

Every artifact is a directory holding a ``manifest.json`` and raw
little-endian float32 arrays whose shapes are declared in the manifest. The
manifest also stores a SHA-256 digest of all array bytes, so any mutation of an
array file is detected on reading. A dataset is laid out as::

    manifest.json
    frames/<t>/histogram.f32
    frames/<t>/wallpoints.f32
    frames/<t>/pointcloud.f32
    truth/trajectories.f32
    truth/camera.f32

.. autosummary::
    write_dataset
    read_dataset
    write_stir
    read_stir
    write_volume
    read_volume

Sensor profiles
---------------

.. autosummary::
    SensorProfile
    PROFILES
    get_profile

Evaluation
----------

.. autosummary::
    evaluate_trajectory
    match_objects
    aperture_distance

Code details
------------
"""
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._errors import ConfigError, CorruptManifest, DigestMismatch, MissingArray, ShapeMismatch
from .geometry import SPEED_OF_LIGHT, CameraModel, Pose
from .lct import AlbedoVolume, GridSpec
from .simulator import Dataset, FrameMeasurement, NoiseConfig
from .stir import CanonicalSTIR

__all__ = [
    "Dataset",
    "SensorProfile",
    "PROFILES",
    "get_profile",
    "write_dataset",
    "read_dataset",
    "write_stir",
    "read_stir",
    "write_volume",
    "read_volume",
    "evaluate_trajectory",
    "match_objects",
    "aperture_distance",
]

FORMAT_VERSION = 1
DTYPE = np.dtype("<f4")


def _write_arrays(root, arrays):
    """Writes named arrays below ``root``; returns their manifest entries and digest."""
    digest = hashlib.sha256()
    entries = {}
    for name, (relpath, array) in arrays.items():
        data = np.ascontiguousarray(array, dtype=DTYPE)
        path = os.path.join(root, relpath)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        data.tofile(path)
        digest.update(data.tobytes())
        entries[name] = {"path": relpath, "shape": list(data.shape)}
    return entries, digest.hexdigest()


def _read_arrays(root, entries, expected_digest, verify=True):
    digest = hashlib.sha256()
    arrays = {}
    for name, entry in entries.items():
        try:
            relpath, shape = entry["path"], tuple(entry["shape"])
        except (KeyError, TypeError) as e:
            raise CorruptManifest(f"Array entry {name!r} needs a path and a shape.") from e
        path = os.path.join(root, relpath)
        if not os.path.isfile(path):
            raise MissingArray(f"Array file {relpath} is missing.")
        data = np.fromfile(path, dtype=DTYPE)
        if data.size != int(np.prod(shape)):
            raise ShapeMismatch(f"Array file {relpath} holds {data.size} values, expected shape {shape}.")
        digest.update(data.tobytes())
        arrays[name] = data.reshape(shape).astype(np.float32)
    if verify and digest.hexdigest() != expected_digest:
        raise DigestMismatch(f"Array contents under {root} do not match the manifest digest.")
    return arrays


def _write_manifest(root, manifest):
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def _read_manifest(root, kind):
    path = os.path.join(root, "manifest.json")
    if not os.path.isfile(path):
        raise MissingArray(f"No manifest found in {root}.")
    try:
        with open(path, encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise CorruptManifest(f"Manifest {path} is not valid JSON.") from e
    if not isinstance(manifest, dict) or manifest.get("kind") != kind:
        raise CorruptManifest(f"Manifest {path} does not describe a {kind}.")
    for key in ("arrays", "digest"):
        if key not in manifest:
            raise CorruptManifest(f"Manifest {path} has no {key!r} entry.")
    return manifest


def _camera_to_dict(camera):
    return {
        "intrinsics": camera.intrinsics.tolist(),
        "resolution": list(camera.resolution),
        "n_bins": camera.n_bins,
        "bin_width": camera.bin_width,
        "pulse_sigma": camera.pulse_sigma,
        "falloff": camera.falloff,
    }


def _grid_to_dict(grid):
    return {"extents": [list(e) for e in grid.extents], "counts": list(grid.counts)}


def _grid_from_dict(entry):
    return GridSpec(tuple(tuple(e) for e in entry["extents"]), tuple(entry["counts"]))


def write_dataset(dataset, path):
    """Writes a dataset directory.

    Args:
        dataset (Dataset): the dataset
        path (str): target directory; created if needed
    """
    arrays = {}
    frames = []
    for t, frame in enumerate(dataset.frames):
        arrays[f"{t}/histogram"] = (f"frames/{t}/histogram.f32", frame.histogram)
        arrays[f"{t}/wallpoints"] = (f"frames/{t}/wallpoints.f32", frame.wall_points)
        if frame.point_cloud is not None:
            arrays[f"{t}/pointcloud"] = (f"frames/{t}/pointcloud.f32", frame.point_cloud)
        frames.append(
            {
                "timestamp": float(frame.timestamp),
                "pose": {
                    "rotation": frame.pose.rotation.tolist(),
                    "translation": frame.pose.translation.tolist(),
                },
            }
        )
    if "objects" in dataset.truth:
        arrays["truth/objects"] = ("truth/trajectories.f32", dataset.truth["objects"])
    if "camera" in dataset.truth:
        arrays["truth/camera"] = ("truth/camera.f32", dataset.truth["camera"])

    entries, digest = _write_arrays(path, arrays)
    manifest = {
        "kind": "dataset",
        "version": FORMAT_VERSION,
        "camera": _camera_to_dict(dataset.camera),
        "frame_count": dataset.frame_count,
        "frames": frames,
        "metadata": dataset.metadata,
        "arrays": entries,
        "digest": digest,
    }
    _write_manifest(path, manifest)


def read_dataset(path, verify=True):
    """Reads a dataset directory written by :func:`write_dataset`.

    Args:
        path (str): dataset directory
        verify (bool): check the content digest

    Returns:
        Dataset: the dataset with float32 arrays

    Raises:
        CorruptManifest: if the manifest is malformed or inconsistent
        MissingArray: if an array file is missing
        ShapeMismatch: if an array file does not hold its declared shape
        DigestMismatch: if array contents changed after writing
    """
    manifest = _read_manifest(path, "dataset")
    try:
        camera = CameraModel(**manifest["camera"])
        records = manifest["frames"]
        count = manifest["frame_count"]
    except (KeyError, TypeError) as e:
        raise CorruptManifest("Dataset manifest lacks camera or frame records.") from e
    if len(records) != count:
        raise CorruptManifest(f"Manifest declares {count} frames but describes {len(records)}.")

    arrays = _read_arrays(path, manifest["arrays"], manifest["digest"], verify)
    frames = []
    for t, record in enumerate(records):
        try:
            pose = Pose(record["pose"]["rotation"], record["pose"]["translation"])
            histogram = arrays[f"{t}/histogram"]
            wall_points = arrays[f"{t}/wallpoints"]
        except KeyError as e:
            raise CorruptManifest(f"Frame {t} is incomplete in the manifest.") from e
        frames.append(
            FrameMeasurement(pose, wall_points, histogram, record.get("timestamp", 0.0), arrays.get(f"{t}/pointcloud"))
        )

    truth = {}
    if "truth/objects" in arrays:
        truth["objects"] = arrays["truth/objects"]
    if "truth/camera" in arrays:
        truth["camera"] = arrays["truth/camera"]
    return Dataset(camera, frames, truth, manifest.get("metadata", {}))


def write_stir(stir, path):
    """Writes a canonical STIR directory."""
    entries, digest = _write_arrays(path, {"values": ("values.f32", stir.values)})
    manifest = {
        "kind": "stir",
        "version": FORMAT_VERSION,
        "grid": _grid_to_dict(stir.grid),
        "z_ref": stir.z_ref,
        "pulse_sigma_v": stir.pulse_sigma_v,
        "overflow": stir.overflow,
        "arrays": entries,
        "digest": digest,
    }
    _write_manifest(path, manifest)


def read_stir(path, verify=True):
    """Reads a canonical STIR directory written by :func:`write_stir`."""
    manifest = _read_manifest(path, "stir")
    arrays = _read_arrays(path, manifest["arrays"], manifest["digest"], verify)
    try:
        grid = _grid_from_dict(manifest["grid"])
        return CanonicalSTIR(
            arrays["values"], grid, manifest["z_ref"], manifest.get("pulse_sigma_v", 0.0), manifest.get("overflow", 0)
        )
    except (KeyError, TypeError) as e:
        raise CorruptManifest("STIR manifest lacks its grid or reference depth.") from e


def write_volume(volume, path):
    """Writes an albedo volume directory."""
    entries, digest = _write_arrays(path, {"values": ("volume.f32", volume.values)})
    manifest = {
        "kind": "volume",
        "version": FORMAT_VERSION,
        "grid": _grid_to_dict(volume.grid),
        "arrays": entries,
        "digest": digest,
    }
    _write_manifest(path, manifest)


def read_volume(path, verify=True):
    """Reads an albedo volume directory written by :func:`write_volume`."""
    manifest = _read_manifest(path, "volume")
    arrays = _read_arrays(path, manifest["arrays"], manifest["digest"], verify)
    try:
        grid = _grid_from_dict(manifest["grid"])
    except (KeyError, TypeError) as e:
        raise CorruptManifest("Volume manifest lacks its grid.") from e
    return AlbedoVolume(arrays["values"].astype(np.float64), grid)


@dataclass(frozen=True, eq=False)
class SensorProfile:
    """Named sensor with its noise model and filter defaults.

    Args:
        name (str): unique profile name
        camera (CameraModel): the sensor
        noise (NoiseConfig): photon and range noise
        frame_rate (float): frames per second
        r (float): default random-walk radius of the filters in meters
        stir_grid (GridSpec): default STIR grid over :math:`(x, y, v)`
        description (str): one-line summary
    """

    name: str
    camera: CameraModel
    noise: NoiseConfig
    frame_rate: float
    r: float
    stir_grid: GridSpec
    description: str = ""


_CONSUMER = CameraModel.pinhole(
    9.0, (10, 10), n_bins=128, bin_width=0.04 / SPEED_OF_LIGHT, pulse_sigma=2e-10, falloff="retroreflective"
)
_CONSUMER_NOISE = NoiseConfig(ambient_rate=0.05, dark_rate=0.01, range_sigma=0.005, peak_photons=50.0)
_STIR_GRID = GridSpec(((-1.2, 1.2), (-1.2, 1.2), (0.0, 4.0)), (97, 97, 129))

PROFILES = {
    p.name: p
    for p in [
        SensorProfile(
            "consumer-10x10-30hz",
            _CONSUMER,
            _CONSUMER_NOISE,
            30.0,
            0.05,
            _STIR_GRID,
            "10x10 flash LiDAR, retroreflective targets, continuous 30 Hz capture",
        ),
        SensorProfile(
            "consumer-10x10-stopmotion",
            _CONSUMER,
            _CONSUMER_NOISE,
            30.0,
            0.2,
            _STIR_GRID,
            "10x10 flash LiDAR, one frame per waypoint of a stop-motion raster",
        ),
        SensorProfile(
            "research-32x32-diffuse",
            CameraModel.pinhole(
                28.0, (32, 32), n_bins=256, bin_width=0.02 / SPEED_OF_LIGHT, pulse_sigma=1e-10, falloff="diffuse"
            ),
            NoiseConfig(ambient_rate=0.01, dark_rate=0.005, range_sigma=0.002, peak_photons=500.0),
            30.0,
            0.05,
            GridSpec(((-1.2, 1.2), (-1.2, 1.2), (0.0, 4.0)), (97, 97, 257)),
            "32x32 scanning SPAD, diffuse targets, for reconstruction",
        ),
    ]
}
"""dict[str, SensorProfile]: shipped sensor profiles by name"""


def get_profile(name):
    """Looks up a sensor profile.

    Raises:
        ConfigError: for unknown names
    """
    try:
        return PROFILES[name]
    except KeyError as e:
        raise ConfigError(f"Unknown sensor profile {name!r}; choose from {sorted(PROFILES)}.") from e


def evaluate_trajectory(estimate, ground_truth, frames=None):
    """Euclidean position errors of an estimated trajectory.

    Rows of ``estimate`` that contain NaN mark skipped frames and are left out of
    the summary statistics.

    Args:
        estimate (array): positions of shape ``(T', 3)`` or ``(T', M, 3)``
        ground_truth (array): positions of the same shape, or of the full sequence
            when ``frames`` is given
        frames (array[int]): frame index of every row of ``estimate``

    Returns:
        dict: ``mean``, ``median`` and ``max`` error in meters, ``valid`` frame count and
        ``per_frame`` errors (NaN for skipped frames)
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(ground_truth, dtype=np.float64)
    if frames is not None:
        truth = truth[np.asarray(frames)]
    if estimate.shape != truth.shape:
        raise ShapeMismatch(f"Estimate of shape {estimate.shape} does not match truth of shape {truth.shape}.")

    errors = np.linalg.norm(estimate - truth, axis=-1)
    valid = errors[np.isfinite(errors)]
    if valid.size == 0:
        return {"mean": np.nan, "median": np.nan, "max": np.nan, "valid": 0, "per_frame": errors}
    return {
        "mean": float(valid.mean()),
        "median": float(np.median(valid)),
        "max": float(valid.max()),
        "valid": int(valid.size),
        "per_frame": errors,
    }


def match_objects(estimates, truth):
    """Assigns estimated objects to true objects frame by frame.

    Args:
        estimates (array): shape ``(T, M, 3)``
        truth (array): shape ``(T, M, 3)``

    Returns:
        tuple[array, array]: estimates reordered to match ``truth`` and the assignment of
        shape ``(T, M)`` giving the estimate index used for every true object
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimates.shape != truth.shape:
        raise ShapeMismatch("Estimates and truth must have the same shape.")

    assignment = np.zeros(truth.shape[:2], dtype=np.int64)
    for t in range(len(truth)):
        cost = np.linalg.norm(truth[t][:, None] - estimates[t][None], axis=-1)
        _, cols = linear_sum_assignment(np.nan_to_num(cost, nan=1e12))
        assignment[t] = cols
    matched = np.take_along_axis(estimates, assignment[..., None], axis=1)
    return matched, assignment


def aperture_distance(positions, dataset, frames=None):
    """Distance from an object to the centroid of the imaged wall patch, per frame.

    Args:
        positions (array): object positions of shape ``(T', 3)``
        dataset (Dataset): the frames
        frames (array[int]): frame index of every row of ``positions``

    Returns:
        array: distances in meters
    """
    positions = np.asarray(positions, dtype=np.float64)
    if frames is None:
        frames = np.arange(len(positions))
    centers = np.array([np.asarray(dataset.frames[t].wall_points, dtype=np.float64).reshape(-1, 3).mean(axis=0) for t in frames])
    return np.linalg.norm(positions - centers, axis=-1)
