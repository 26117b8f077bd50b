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
Plotting
========

.. currentmodule:: periscope.plotting

Static SVG figures of trajectories, volumes and posterior densities. Figures are
drawn without the pyplot state machine, and the SVG writer is pinned to a fixed
hash salt and no date, so equal inputs give byte-identical files.

.. autosummary::
    plot_trajectories
    plot_volume
    plot_density

Code details
------------
"""
import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["plot_trajectories", "plot_volume", "plot_density"]

_SVG_STYLE = {"svg.hashsalt": "periscope", "svg.fonttype": "path"}
_AXES = "xyz"


def _save(fig, path):
    FigureCanvasAgg(fig)
    with matplotlib.rc_context(_SVG_STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})


def plot_trajectories(path, estimate, truth=None, frames=None, title=""):
    """Line plot of the ``x``, ``y`` and ``z`` coordinates over frames.

    Args:
        path (str): output SVG file
        estimate (array): positions of shape ``(T, 3)`` or ``(T, M, 3)``
        truth (array): optional ground truth of the same shape
        frames (array[int]): frame indices of the rows; defaults to ``0..T-1``
        title (str): figure title
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    if estimate.ndim == 2:
        estimate = estimate[:, None]
    if frames is None:
        frames = np.arange(len(estimate))
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64).reshape(estimate.shape)

    fig = Figure(figsize=(8, 6))
    axes = fig.subplots(3, 1, sharex=True)
    for d, ax in enumerate(axes):
        for m in range(estimate.shape[1]):
            ax.plot(frames, estimate[:, m, d], label=f"estimate {m}")
            if truth is not None:
                ax.plot(frames, truth[:, m, d], "--", label=f"truth {m}")
        ax.set_ylabel(f"{_AXES[d]} (m)")
    axes[0].legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("frame")
    if title:
        fig.suptitle(title)
    _save(fig, path)


def plot_volume(path, volume, axis=2, index=None, title=""):
    """Heatmap of a volume slice or of its maximum-intensity projection.

    Args:
        path (str): output SVG file
        volume (AlbedoVolume): the volume
        axis (int): slicing or projection axis
        index (int): node of the slice along ``axis``; ``None`` projects the maximum
        title (str): figure title
    """
    if index is None:
        image = np.max(volume.values, axis=axis)
    else:
        image = np.take(volume.values, index, axis=axis)
    shown = [i for i in range(3) if i != axis]
    extent = [*volume.grid.extents[shown[0]], *volume.grid.extents[shown[1]]]

    fig = Figure(figsize=(5, 5))
    ax = fig.subplots()
    mappable = ax.imshow(image.T, origin="lower", extent=extent, aspect="auto", cmap="magma")
    ax.set_xlabel(f"{_AXES[shown[0]]} (m)")
    ax.set_ylabel(f"{_AXES[shown[1]]} (m)")
    fig.colorbar(mappable, ax=ax)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_density(path, density, grid, truth=None, title=""):
    """Contour plot of a two-dimensional posterior density.

    Args:
        path (str): output SVG file
        density (array): values on ``grid``
        grid (GridSpec): two-dimensional grid
        truth (array[float]): optional true position marked with a cross
        title (str): figure title
    """
    x, y = grid.axis(0), grid.axis(1)
    fig = Figure(figsize=(5, 5))
    ax = fig.subplots()
    ax.contourf(x, y, np.asarray(density).T, levels=12, cmap="viridis")
    if truth is not None:
        ax.plot(truth[0], truth[1], "rx")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    _save(fig, path)
