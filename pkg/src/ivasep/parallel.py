"""Per-bin work distribution.

Bins are split into chunks of a fixed size that does not depend on the
number of workers, so every chunk sees exactly the same arrays whether it
runs alone or in a pool. That keeps results bit-identical across worker
counts.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

WORKERS_ENV = "IVASEP_WORKERS"
BIN_CHUNK = 256

T = TypeVar("T")


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, workers)


def map_chunks(fn: Callable[[slice], T], n_bins: int, workers: Optional[int] = None) -> List[T]:
    """Apply ``fn`` to consecutive bin slices; results come back in bin order."""
    slices = [slice(s, min(s + BIN_CHUNK, n_bins)) for s in range(0, n_bins, BIN_CHUNK)]
    n = worker_count(workers)
    if n == 1 or len(slices) == 1:
        return [fn(sl) for sl in slices]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, slices))
