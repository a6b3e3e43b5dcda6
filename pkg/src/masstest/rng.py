"""Deterministic seed derivation and order-independent parallel mapping.

Every randomized routine in this package consumes an integer seed. When a
routine fans out into independent work items (channels, permutations,
simulation replicates), each item derives its own generator from
``(base_seed, *index_path)`` so results do not depend on execution order
or on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(base_seed: int, *key: int) -> int:
    """Derive a stable child seed from a base seed and an index path.

    Uses ``numpy.random.SeedSequence`` hashing, which is specified to be
    stable across platforms and numpy versions.
    """
    ss = np.random.SeedSequence((int(base_seed),) + tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def spawn_rng(base_seed: int, *key: int) -> np.random.Generator:
    """Generator seeded from ``derive_seed(base_seed, *key)``."""
    return np.random.default_rng(derive_seed(base_seed, *key))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items``, optionally on a thread pool.

    Output order always matches input order, so a deterministic ``fn``
    yields identical results at any worker count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def resolve_seed(seed: int | None) -> int:
    """Replace ``None`` with a fresh random seed (recorded by callers)."""
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    return int(seed)
