"""Counter-based random streams.

Replicate ``i`` of a run with seed ``s`` draws from a Philox generator keyed by
``s XOR i`` in the low 64 bits and a purpose salt in the high 64 bits, so each
replicate is reproducible on its own regardless of which worker runs it.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
T = TypeVar("T")


def salt(*parts) -> int:
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, index: int, purpose: int = 0) -> np.random.Generator:
    key = ((purpose & MASK64) << 64) | ((int(seed) ^ int(index)) & MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def default_workers() -> int:
    env = os.environ.get("MALIGN_THREADS")
    if env:
        return max(1, int(env))
    return 1


def map_replicates(fn: Callable[[int], T], count: int, workers: int | None = None) -> list[T]:
    """``[fn(0), .., fn(count - 1)]`` in index order; threads only change scheduling."""
    workers = workers or default_workers()
    cap = os.environ.get("MALIGN_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def draw_words(probs: np.ndarray, lengths: Sequence[int], rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """One i.i.d. word per row of ``probs``, independent across rows."""
    k = probs.shape[1]
    return tuple(rng.choice(k, size=int(n), p=probs[j]).astype(np.int64) for j, n in enumerate(lengths))
