"""Chunked thread-pool helper honoring ``FIBERSEG_THREADS``."""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def n_threads():
    value = os.environ.get("FIBERSEG_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def map_rows(func, arrays, min_chunk=4096):
    """Apply ``func`` to row-chunks of ``arrays`` and concatenate the results.

    ``func`` must be row-wise (output row i depends only on input row i) so
    the result is independent of the chunking and of the thread count.
    """
    n = len(arrays[0])
    workers = n_threads()
    if workers == 1 or n <= min_chunk:
        return func(*arrays)
    bounds = np.linspace(0, n, min(workers, -(-n // min_chunk)) + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda s: func(*(a[s] for a in arrays)), slices))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)
