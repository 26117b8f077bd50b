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
"""Thread-parallel helpers built on ``dask.delayed``."""
import dask
import numpy as np


def parallel_map(fn, items, workers=1):
    """Applies ``fn`` to every item, optionally on a dask thread pool.

    Results come back in input order, so any worker count gives the same output
    as long as ``fn`` is deterministic.

    Args:
        fn (callable): function of one argument
        items (list): arguments
        workers (int): number of threads; ``1`` runs serially

    Returns:
        list: ``[fn(item) for item in items]``
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    compute_list = [dask.delayed(fn)(item) for item in items]
    return list(dask.compute(*compute_list, scheduler="threads", num_workers=workers))


def chunk_slices(n, workers):
    """Splits ``range(n)`` into at most ``workers`` contiguous slices."""
    bounds = np.linspace(0, n, max(min(workers, n), 1) + 1).astype(int)
    return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
