"""Worker-count plumbing for the RETRO_THREADS environment variable."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Worker cap from RETRO_THREADS; 0 or unset means auto (cpu count)."""
    raw = os.environ.get("RETRO_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"RETRO_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("RETRO_THREADS must be non-negative")
    if n == 0:
        return os.cpu_count() or 1
    return n


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map preserving input order; parallel only when RETRO_THREADS allows.

    Results are identical to the sequential map regardless of worker count.
    """
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
