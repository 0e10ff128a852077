"""Optional row parallelism, capped by the OODSCREEN_THREADS variable.

Batch operations in this package are defined row by row, so they can be
spread over threads without changing any result: every row is evaluated by
the same single-row call whether the pool has one worker or many. The
default is sequential execution.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

from .errors import InvalidInput

THREADS_ENV_VAR = "OODSCREEN_THREADS"

T = TypeVar("T")


def thread_cap() -> int:
    """Maximum worker threads allowed by the environment (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise InvalidInput(f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    return value


def map_indexed(func: Callable[[int], T], count: int) -> list[T]:
    """Evaluate ``func(i)`` for ``i in range(count)``, preserving order.

    Indices are split into contiguous chunks across at most ``thread_cap()``
    threads. Results are schedule-independent because each index is computed
    independently by the same call in either mode.
    """
    threads = min(thread_cap(), count)
    if threads <= 1:
        return [func(i) for i in range(count)]
    results: list[T] = [None] * count  # type: ignore[list-item]
    chunk = -(-count // threads)

    def run(start: int) -> None:
        for i in range(start, min(start + chunk, count)):
            results[i] = func(i)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        # list() drains the iterator so worker exceptions propagate here.
        list(pool.map(run, range(0, count, chunk)))
    return results
