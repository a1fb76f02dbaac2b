"""Order-preserving thread map for embarrassingly parallel sweeps.

Used for per-document work (expert scoring, informativeness) where numpy
releases the GIL; results come back in input order regardless of thread
scheduling, so parallelism never perturbs downstream determinism.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    items = list(items)
    n = threads if threads is not None else default_threads()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
