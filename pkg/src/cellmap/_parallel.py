"""Chunked thread-pool evaluation with order-preserving results."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 16384


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``CELLMAP_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("CELLMAP_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def map_chunks(fn, n: int, threads: int | None = None, chunk: int = CHUNK):
    """Apply ``fn(start, stop)`` over ``range(n)`` in chunks and concatenate.

    Results are assembled in index order, so output never depends on the
    schedule.
    """
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)] or [(0, 0)]
    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts)


def map_ordered(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly concurrently, in input order."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
