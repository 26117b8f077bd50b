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
Command line interface
======================

.. currentmodule:: periscope.cli

The ``periscope`` command runs the batch pipelines::

    periscope simulate        --config scene.json --out run/
    periscope precompute-stir --config scene.json --out run/
    periscope track           run/dataset run/stirs/0 --out run/
    periscope localize        run/dataset run/stirs/0 --out run/
    periscope reconstruct     run/dataset --out run/
    periscope evaluate        run/track.json run/dataset --out run/
    periscope plot            run/track.json --dataset run/dataset --out run/

Settings are resolved from, in increasing priority, built-in defaults, the
sensor profile, the JSON config file, ``PERISCOPE_*`` environment variables and
command line flags. Unknown config keys are rejected.

Failures exit with ``2`` (configuration), ``3`` (input data) or ``4``
(numerical failure) and print a one-line JSON error record to standard error.

.. autosummary::
    RunConfig
    load_config
    main

Code details
------------
"""
import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from ._errors import ConfigError, PeriscopeError
from ._version import __version__
from .dataset import (
    evaluate_trajectory,
    get_profile,
    match_objects,
    read_dataset,
    read_stir,
    read_volume,
    write_dataset,
    write_stir,
    write_volume,
)
from .lct import AlbedoVolume, GridSpec
from .localization import localize
from .particle_filter import FilterConfig, ParticleSet, kde, scott_bandwidth
from .plotting import plot_density, plot_trajectories, plot_volume
from .reconstruction import accumulate, backproject, threshold_points
from .simulator import (
    generate_trajectory,
    load_object,
    mannequin_object,
    patch_object,
    point_object,
    simulate_sequence,
)
from .stir import precompute_canonical_stir
from .tracking import TrackConfig, track

__all__ = ["RunConfig", "load_config", "main"]

logger = logging.getLogger(__name__)

EXIT_CODES = {"config": 2, "data": 3, "numerical": 4}
ENV_PREFIX = "PERISCOPE_"


@dataclass
class TrajectorySpec:
    """Parametric trajectory, see :func:`~.generate_trajectory`."""

    kind: str = "linear"
    params: dict = field(default_factory=dict)
    tilt_step: float = 0.0


@dataclass
class ObjectSpec:
    """Hidden object and its trajectory."""

    kind: str = "patch"
    path: str = None
    size: float = 0.25
    spacing: float = 0.01
    n_points: int = 500
    albedo: float = 1.0
    trajectory: TrajectorySpec = field(
        default_factory=lambda: TrajectorySpec("linear", {"start": [-0.15, 0.0, 0.7], "velocity": [0.3, 0.0, 0.0]})
    )


@dataclass
class SceneSpec:
    """Objects, camera motion and frame count of a simulation."""

    frames: int = 30
    objects: list = field(default_factory=lambda: [ObjectSpec()])
    camera: TrajectorySpec = field(
        default_factory=lambda: TrajectorySpec("linear", {"start": [0.0, 0.0, 1.0], "velocity": [0.0, 0.0, 0.0]})
    )


@dataclass
class NoiseSpec:
    """Overrides of the profile noise model; ``None`` keeps the profile value."""

    enabled: bool = True
    signal_scale: float = None
    ambient_rate: float = None
    dark_rate: float = None
    range_sigma: float = None
    peak_photons: float = None


@dataclass
class FilterSpec:
    """Particle filter settings; ``r=None`` takes the profile radius."""

    K: int = 1000
    r: float = None
    eta: float = 4.0
    bounds: list = None
    skip: int = 5
    estimator: str = None
    modes: int = 3
    partitioned: bool = True
    window: float = None


@dataclass
class StirSpec:
    """STIR grid and reference depth; ``None`` entries come from the profile."""

    extents: list = None
    counts: list = None
    z_ref: float = 0.7
    pulse_sigma: float = None


@dataclass
class ReconstructionSpec:
    """Voxel grid and thresholds of the reconstruction."""

    extents: list = field(default_factory=lambda: [[-0.3, 0.3], [-0.3, 0.3], [0.4, 1.0]])
    counts: list = field(default_factory=lambda: [30, 30, 30])
    cell: float = 0.005
    fraction: float = 0.5


@dataclass
class RunConfig:
    """Complete settings of one command.

    Args:
        profile (str): sensor profile name
        seed (int): master seed
        workers (int): worker threads
        out (str): output directory
        scene (SceneSpec): simulated scene
        noise (NoiseSpec): noise overrides
        filter (FilterSpec): particle filter settings
        stir (StirSpec): STIR settings
        reconstruction (ReconstructionSpec): reconstruction settings
    """

    profile: str = "consumer-10x10-30hz"
    seed: int = 0
    workers: int = 1
    out: str = "out"
    scene: SceneSpec = field(default_factory=SceneSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    filter: FilterSpec = field(default_factory=FilterSpec)
    stir: StirSpec = field(default_factory=StirSpec)
    reconstruction: ReconstructionSpec = field(default_factory=ReconstructionSpec)


_NESTED = {
    (RunConfig, "scene"): SceneSpec,
    (RunConfig, "noise"): NoiseSpec,
    (RunConfig, "filter"): FilterSpec,
    (RunConfig, "stir"): StirSpec,
    (RunConfig, "reconstruction"): ReconstructionSpec,
    (SceneSpec, "camera"): TrajectorySpec,
    (ObjectSpec, "trajectory"): TrajectorySpec,
}
_LISTS = {(SceneSpec, "objects"): ObjectSpec}


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_numeric_tree(value):
    if isinstance(value, list):
        return all(_is_numeric_tree(v) for v in value)
    return _is_number(value)


def _check_leaf(value, kind, path):
    if value is None:
        return
    if kind is float:
        valid = _is_number(value)
    elif kind is int:
        valid = isinstance(value, int) and not isinstance(value, bool)
    elif kind is list:
        valid = isinstance(value, list) and _is_numeric_tree(value)
    elif kind is dict:
        valid = isinstance(value, dict) and all(_is_numeric_tree(v) for v in value.values())
    else:
        valid = isinstance(value, kind)
    if not valid:
        raise ConfigError(f"Config entry {path} has the malformed value {value!r}; expected {kind.__name__}.")


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"Config section {where or 'root'} must be an object.")
    kinds = {f.name: f.type for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(kinds))
    if unknown:
        raise ConfigError(f"Unknown config keys at {where or 'root'}: {', '.join(unknown)}.")

    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if (cls, key) in _NESTED:
            value = _build(_NESTED[cls, key], value, path)
        elif (cls, key) in _LISTS:
            if not isinstance(value, list):
                raise ConfigError(f"Config entry {path} must be a list.")
            value = [_build(_LISTS[cls, key], item, f"{path}[{i}]") for i, item in enumerate(value)]
        else:
            _check_leaf(value, kinds[key], path)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path=None, env=None, **flags):
    """Resolves the run configuration.

    Args:
        path (str): JSON config file; relative paths inside it resolve against its directory
        env (dict[str, str]): environment; defaults to ``os.environ``
        **flags: command line values (``seed``, ``workers``, ``profile``, ``out``);
            ``None`` entries are ignored

    Returns:
        RunConfig: the configuration

    Raises:
        ConfigError: on unreadable files, unknown keys or malformed values
    """
    env = os.environ if env is None else env
    data = {}
    base = os.getcwd()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}.") from e
        base = os.path.dirname(os.path.abspath(path))
    cfg = _build(RunConfig, data, "")

    casts = {"seed": int, "workers": int, "profile": str, "out": str}
    for name, cast in casts.items():
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            try:
                setattr(cfg, name, cast(raw))
            except ValueError as e:
                raise ConfigError(f"Environment variable {ENV_PREFIX}{name.upper()} is malformed.") from e
        if flags.get(name) is not None:
            setattr(cfg, name, flags[name])

    # validates the name before any work starts
    get_profile(cfg.profile)
    if cfg.workers < 1:
        raise ConfigError("At least one worker is required.")
    if cfg.scene.frames < 1:
        raise ConfigError("A scene needs at least one frame.")

    if path is not None and not os.path.isabs(cfg.out) and flags.get("out") is None and ENV_PREFIX + "OUT" not in env:
        cfg.out = os.path.join(base, cfg.out)
    for obj in cfg.scene.objects:
        if obj.path is not None and not os.path.isabs(obj.path):
            obj.path = os.path.join(base, obj.path)
    return cfg


def _make_object(spec):
    if spec.kind == "patch":
        return patch_object(spec.size, spec.spacing, spec.albedo)
    if spec.kind == "point":
        return point_object(spec.albedo)
    if spec.kind == "mannequin":
        return mannequin_object(spec.n_points)
    if spec.kind == "file":
        if spec.path is None:
            raise ConfigError("File objects need a path.")
        return load_object(spec.path)
    raise ConfigError(f"Unknown object kind {spec.kind!r}.")


def _make_trajectory(spec, frames, frame_rate):
    params = dict(spec.params)
    if spec.kind != "grid":
        params.setdefault("frames", frames)
    params.pop("frame_rate", None)
    try:
        return generate_trajectory(spec.kind, frame_rate=frame_rate, tilt_step=spec.tilt_step, **params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for a {spec.kind!r} trajectory: {e}.") from e


def _noise(cfg, profile):
    if not cfg.noise.enabled:
        return None
    overrides = {k: v for k, v in dataclasses.asdict(cfg.noise).items() if k != "enabled" and v is not None}
    return dataclasses.replace(profile.noise, seed=cfg.seed, **overrides)


def _stir_grid(cfg, profile):
    if cfg.stir.extents is None and cfg.stir.counts is None:
        return profile.stir_grid
    extents = cfg.stir.extents or profile.stir_grid.extents
    counts = cfg.stir.counts or profile.stir_grid.counts
    return GridSpec(tuple(tuple(e) for e in extents), tuple(counts))


def cmd_simulate(cfg, args):
    """Simulates the configured scene into ``<out>/dataset``."""
    profile = get_profile(cfg.profile)
    scene = cfg.scene
    objects = [
        (_make_object(o), _make_trajectory(o.trajectory, scene.frames, profile.frame_rate)) for o in scene.objects
    ]
    camera_traj = _make_trajectory(scene.camera, scene.frames, profile.frame_rate)
    dataset = simulate_sequence(
        objects, profile.camera, camera_traj, _noise(cfg, profile), cfg.workers, {"profile": profile.name}
    )
    path = os.path.join(cfg.out, "dataset")
    write_dataset(dataset, path)
    logger.info("wrote %d frames to %s", dataset.frame_count, path)
    return {"dataset": path}


def cmd_precompute_stir(cfg, args):
    """Precomputes the STIR of every configured object into ``<out>/stirs/<i>``."""
    profile = get_profile(cfg.profile)
    grid = _stir_grid(cfg, profile)
    pulse = profile.camera.pulse_sigma if cfg.stir.pulse_sigma is None else cfg.stir.pulse_sigma
    specs = cfg.scene.objects
    if args.object is not None:
        specs = [ObjectSpec(kind="file", path=args.object)]

    paths = []
    for i, spec in enumerate(specs):
        stir = precompute_canonical_stir(_make_object(spec), grid, pulse, cfg.stir.z_ref)
        path = os.path.join(cfg.out, "stirs", str(i))
        write_stir(stir, path)
        paths.append(path)
    return {"stirs": paths}


def _particle_bounds(cfg, default):
    bounds = cfg.filter.bounds if cfg.filter.bounds is not None else default
    return tuple(tuple(b) for b in bounds)


def _filter_config(cfg, profile, bounds):
    r = profile.r if cfg.filter.r is None else cfg.filter.r
    return FilterConfig(cfg.filter.K, r, cfg.filter.eta, bounds, cfg.seed)


def _write_kde(path, snapshots, grid):
    for t, p in enumerate(snapshots):
        density = kde(p, scott_bandwidth(p, min(grid.spacing)), grid)
        write_volume(AlbedoVolume(density, grid), os.path.join(path, str(t)))


def _write_csv(path, header, rows):
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.9g")


def cmd_track(cfg, args):
    """Tracks hidden objects; writes ``track.json`` and ``track.csv``."""
    profile = get_profile(cfg.profile)
    dataset = read_dataset(args.dataset)
    stirs = [read_stir(p) for p in args.stirs]
    bounds = _particle_bounds(cfg, [[-0.5, 0.5], [-0.5, 0.5], [0.3, 1.2]])
    estimator = cfg.filter.estimator or ("mean" if len(stirs) == 1 else "kmeans")
    tcfg = TrackConfig(
        _filter_config(cfg, profile, bounds),
        stirs,
        estimator,
        cfg.filter.skip,
        cfg.filter.modes,
        cfg.workers,
        cfg.filter.partitioned,
        cfg.filter.window,
    )
    result = track(dataset, tcfg)

    os.makedirs(cfg.out, exist_ok=True)
    record = {
        "kind": "track",
        "frames": result.frames.tolist(),
        "estimates": result.estimates.tolist(),
        "object_weights": result.object_weights.tolist(),
        "ess": result.ess.tolist(),
        "degenerate": result.degenerate,
    }
    with open(os.path.join(cfg.out, "track.json"), "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    rows = [[t, m, *xyz] for t, est in zip(result.frames, result.estimates) for m, xyz in enumerate(est)]
    _write_csv(os.path.join(cfg.out, "track.csv"), ["frame", "object", "x", "y", "z"], rows)

    if args.kde:
        (lo_x, hi_x), (lo_y, hi_y), (lo_z, hi_z) = bounds[:3]
        grid = GridSpec(((lo_x, hi_x), (lo_y, hi_y), (lo_z, hi_z)), (41, 41, 31))
        first = [ParticleSet(p.states[:, :3], p.weights) for p in result.snapshots]
        _write_kde(os.path.join(cfg.out, "kde"), first, grid)
    return {"track": os.path.join(cfg.out, "track.json")}


def cmd_localize(cfg, args):
    """Localizes the camera; writes ``localize.json`` and ``localize.csv``."""
    profile = get_profile(cfg.profile)
    dataset = read_dataset(args.dataset)
    stir = read_stir(args.stir)
    bounds = _particle_bounds(cfg, [[-0.5, 0.5], [-0.5, 0.5]])
    result = localize(dataset, stir, _filter_config(cfg, profile, bounds), cfg.filter.skip, cfg.workers)

    os.makedirs(cfg.out, exist_ok=True)
    record = {
        "kind": "localize",
        "frames": result.frames.tolist(),
        "positions": result.positions.tolist(),
        "heights": result.heights.tolist(),
        "rotations": result.rotations.tolist(),
        "degenerate": result.degenerate,
    }
    with open(os.path.join(cfg.out, "localize.json"), "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2)
    rows = [[t, *xyz] for t, xyz in zip(result.frames, result.positions)]
    _write_csv(os.path.join(cfg.out, "localize.csv"), ["frame", "x", "y", "z"], rows)

    if args.kde:
        grid = GridSpec(tuple(bounds), (81, 81))
        _write_kde(os.path.join(cfg.out, "kde"), result.snapshots, grid)
    return {"localize": os.path.join(cfg.out, "localize.json")}


def cmd_reconstruct(cfg, args):
    """Fuses all frames and backprojects; writes ``volume/`` and ``isosurface.csv``."""
    dataset = read_dataset(args.dataset)
    spec = cfg.reconstruction
    grid = GridSpec(tuple(tuple(e) for e in spec.extents), tuple(spec.counts))
    volume = backproject(accumulate(dataset, cell=spec.cell), grid, cfg.workers)

    write_volume(volume, os.path.join(cfg.out, "volume"))
    points, values = threshold_points(volume, spec.fraction)
    _write_csv(os.path.join(cfg.out, "isosurface.csv"), ["x", "y", "z", "value"], np.column_stack([points, values]))
    return {"volume": os.path.join(cfg.out, "volume")}


def _read_estimate(path):
    try:
        with open(path, encoding="utf-8") as f:
            record = json.load(f)
        return record, record["kind"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise ConfigError(f"Cannot read estimate file {path}.") from e


def cmd_evaluate(cfg, args):
    """Compares an estimate with the stored ground truth; writes ``metrics.json``."""
    record, kind = _read_estimate(args.estimate)
    dataset = read_dataset(args.dataset)
    frames = np.asarray(record["frames"], dtype=np.int64)

    if kind == "track":
        truth = np.transpose(dataset.truth["objects"], (1, 0, 2))[frames]
        estimates = np.asarray(record["estimates"], dtype=np.float64)
        matched, _ = match_objects(estimates, truth)
        metrics = evaluate_trajectory(matched, truth)
    elif kind == "localize":
        truth = np.asarray(dataset.truth["camera"], dtype=np.float64)[frames]
        positions = np.asarray(record["positions"], dtype=np.float64)
        metrics = evaluate_trajectory(positions, truth)
        metrics["xy"] = evaluate_trajectory(positions[:, :2], truth[:, :2])
        metrics["z"] = evaluate_trajectory(positions[:, 2:], truth[:, 2:])
    else:
        raise ConfigError(f"Cannot evaluate estimates of kind {kind!r}.")

    def clean(m):
        return {k: (clean(v) if isinstance(v, dict) else np.asarray(v).tolist()) for k, v in m.items()}

    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "metrics.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(clean(metrics), f, indent=2)
    logger.info("mean error %.4f m over %d frames", metrics["mean"], metrics["valid"])
    return {"metrics": path}


def _plot_densities(root, out, truth=None):
    """Plots every posterior density exported by ``--kde`` as ``density_<frame>.svg``."""
    paths = []
    frames = sorted((int(name) for name in os.listdir(root) if name.isdigit()))
    for t in frames:
        volume = read_volume(os.path.join(root, str(t)))
        density = volume.values
        if volume.grid.ndim == 3:
            density = density.sum(axis=2)
        grid = GridSpec(volume.grid.extents[:2], volume.grid.counts[:2])
        marker = None if truth is None else truth[t][:2]
        path = os.path.join(out, f"density_{t}.svg")
        plot_density(path, density, grid, marker, title=f"frame {t}")
        paths.append(path)
    return paths


def cmd_plot(cfg, args):
    """Writes SVG plots of a trajectory file or a volume directory.

    A volume gives ``slice_x.svg``, ``slice_y.svg`` and ``slice_z.svg`` through its
    brightest voxel. A trajectory gives ``plot.svg``, plus one ``density_<frame>.svg``
    per posterior density exported next to it with ``--kde``.
    """
    os.makedirs(cfg.out, exist_ok=True)
    if os.path.isdir(args.input):
        volume = read_volume(args.input)
        peak = np.unravel_index(np.argmax(volume.values), volume.values.shape)
        paths = []
        for axis, name in enumerate("xyz"):
            path = os.path.join(cfg.out, f"slice_{name}.svg")
            depth = volume.grid.axis(axis)[peak[axis]]
            plot_volume(path, volume, axis, index=peak[axis], title=f"{name} = {depth:.3f} m")
            paths.append(path)
        return {"plots": paths}

    record, kind = _read_estimate(args.input)
    frames = np.asarray(record["frames"], dtype=np.int64)
    dataset = read_dataset(args.dataset) if args.dataset else None
    truth = full_truth = None
    if kind == "track":
        estimate = np.asarray(record["estimates"], dtype=np.float64)
        if dataset is not None:
            full_truth = np.transpose(dataset.truth["objects"], (1, 0, 2))
            truth = full_truth[frames]
            estimate, assignment = match_objects(estimate, truth)
            # densities hold the first object of the state; mark the true object matched to it most often
            owner = np.bincount(np.argmax(assignment == 0, axis=1), minlength=truth.shape[1]).argmax()
            full_truth = full_truth[:, owner]
    elif kind == "localize":
        estimate = np.asarray(record["positions"], dtype=np.float64)
        if dataset is not None:
            full_truth = np.asarray(dataset.truth["camera"], dtype=np.float64)
            truth = full_truth[frames]
    else:
        raise ConfigError(f"Cannot plot records of kind {kind!r}.")

    path = os.path.join(cfg.out, "plot.svg")
    plot_trajectories(path, estimate, truth, frames, title=kind)
    paths = [path]
    kde_root = os.path.join(os.path.dirname(os.path.abspath(args.input)), "kde")
    if os.path.isdir(kde_root):
        paths += _plot_densities(kde_root, cfg.out, full_truth)
    return {"plots": paths}


COMMANDS = {
    "simulate": cmd_simulate,
    "precompute-stir": cmd_precompute_stir,
    "track": cmd_track,
    "localize": cmd_localize,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "plot": cmd_plot,
}


def build_parser():
    """Argument parser of the ``periscope`` command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--profile", help="sensor profile name")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")

    parser = argparse.ArgumentParser(prog="periscope", description="Motion-aided non-line-of-sight imaging.")
    parser.add_argument("--version", action="version", version=f"periscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="simulate a dataset")
    p = sub.add_parser("precompute-stir", parents=[common], help="precompute object STIRs")
    p.add_argument("--object", help="CSV object file used instead of the configured objects")
    p = sub.add_parser("track", parents=[common], help="track hidden objects")
    p.add_argument("dataset")
    p.add_argument("stirs", nargs="+")
    p.add_argument("--kde", action="store_true", help="export per-frame posterior densities")
    p = sub.add_parser("localize", parents=[common], help="localize the camera")
    p.add_argument("dataset")
    p.add_argument("stir")
    p.add_argument("--kde", action="store_true", help="export per-frame posterior densities")
    p = sub.add_parser("reconstruct", parents=[common], help="fused backprojection")
    p.add_argument("dataset")
    p = sub.add_parser("evaluate", parents=[common], help="compare estimates with ground truth")
    p.add_argument("estimate")
    p.add_argument("dataset")
    p = sub.add_parser("plot", parents=[common], help="SVG plots")
    p.add_argument("input", help="track/localize JSON file or volume directory")
    p.add_argument("--dataset", help="dataset holding the ground truth")
    return parser


def main(argv=None, env=None):
    """Entry point of the ``periscope`` command.

    Args:
        argv (list[str]): arguments; defaults to ``sys.argv[1:]``
        env (dict[str, str]): environment; defaults to ``os.environ``

    Returns:
        int: the exit code
    """
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="level=%(levelname)s logger=%(name)s msg=%(message)s")

    try:
        cfg = load_config(args.config, env, seed=args.seed, workers=args.workers, profile=args.profile, out=args.out)
        outputs = COMMANDS[args.command](cfg, args)
    except PeriscopeError as e:
        _report(e, e.category)
        return EXIT_CODES[e.category]
    except OSError as e:
        _report(e, "data")
        return EXIT_CODES["data"]

    logger.info("%s finished: %s", args.command, outputs)
    return 0


def _report(error, category):
    record = {"error": type(error).__name__, "category": category, "message": str(error)}
    print(json.dumps(record), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
