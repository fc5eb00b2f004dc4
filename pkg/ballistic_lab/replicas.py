"""Per-replica random streams and the replica worker pool.

Replica ``i`` of a run with master seed ``m`` draws from ``PCG64(mix_seed(m, i))``. The mixer is
the splitmix64 finaliser applied to ``m + (i + 1) * GOLDEN``, so neighbouring replica indices
land on unrelated seeds and the derived seed can be recomputed from the metadata alone.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, List, Sequence, TypeVar

import numpy as np

__all__ = ["mix_seed", "replica_rng", "replica_seeds", "map_replicas"]

logger = logging.getLogger(__name__)

T = TypeVar("T")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(master: int, index: int) -> int:
    z = (master + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replica_rng(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix_seed(master, index)))


def replica_seeds(master: int, count: int) -> List[int]:
    return [mix_seed(master, i) for i in range(count)]


def _run_one(fn: Callable[[int, np.random.Generator], T], master: int, index: int) -> T:
    return fn(index, replica_rng(master, index))


def map_replicas(
    fn: Callable[[int, np.random.Generator], T],
    master: int,
    count: int,
    workers: int = 1,
    indices: Sequence[int] | None = None,
) -> List[T]:
    """Run ``fn(index, rng)`` for every replica and return the results in replica order.

    With ``workers > 1`` the replicas fan out to a process pool; ``fn`` must then be picklable
    (a module-level function or a ``functools.partial`` of one). Results do not depend on the
    number of workers.
    """
    indices = list(range(count)) if indices is None else list(indices)
    job = partial(_run_one, fn, master)
    logger.info("running %d replicas (master seed %d, %d workers)", len(indices), master, workers)
    if workers <= 1 or len(indices) <= 1:
        return [job(i) for i in indices]
    chunksize = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(job, indices, chunksize=chunksize))
