"""Deterministic chunked thread map used by the per-node analyses."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "PDESTRUCT_THREADS"


def default_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_chunks(fn, n_items, threads=None, min_chunk=64):
    """Apply ``fn(index_array) -> ndarray`` over ``range(n_items)`` in chunks.

    Chunk results are concatenated in index order, so the output does not
    depend on ``threads``.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    idx = np.arange(n_items)
    if threads == 1 or n_items <= min_chunk:
        return fn(idx)
    n_chunks = min(n_items // min_chunk, threads * 4) or 1
    chunks = np.array_split(idx, n_chunks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)
