"""Deterministic thread-pool helpers.

LORSTAB_THREADS caps worker counts; results are always collected in input
order, so outputs are identical across thread counts.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "ordered_map"]


def thread_count() -> int:
    raw = os.environ.get("LORSTAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def ordered_map(fn, items):
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
