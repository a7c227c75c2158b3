"""Deterministic chunked random streams.

Work of ``total`` items is cut into fixed-size chunks. Chunk ``i`` draws
from ``SeedSequence([seed, tag, i])`` so results depend only on
``(seed, tag, chunk_size)``, never on the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

__all__ = ["DEFAULT_CHUNK", "resolve_seed", "chunk_bounds", "chunk_rng", "map_chunks", "default_threads", "concat"]

DEFAULT_CHUNK = 4096
_SEED_MASK = (1 << 64) - 1


def resolve_seed(seed) -> int:
    """Turn an int, a Generator or ``None`` into a 64-bit seed.

    ``None`` falls back to the ``QCL_SEED`` environment variable, then 0.
    A Generator contributes one draw, so repeated calls advance it.
    """
    if seed is None:
        env = os.environ.get("QCL_SEED")
        return int(env) & _SEED_MASK if env not in (None, "") else 0
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2 ** 63))
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        return int(seed) & _SEED_MASK
    raise TypeError(f"cannot derive a seed from {type(seed).__name__}")


def chunk_bounds(total: int, chunk: int = DEFAULT_CHUNK) -> list[tuple[int, int]]:
    if total < 0 or chunk < 1:
        raise ValueError("total must be >= 0 and chunk >= 1")
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def chunk_rng(seed: int, tag: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag, index]))


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def map_chunks(fn: Callable[[np.random.Generator, int], object], total: int, seed, tag: int = 0,
               chunk: int = DEFAULT_CHUNK, threads: int | None = None) -> list:
    """Run ``fn(rng, size)`` on every chunk and return results in chunk order.

    Parameters
    ----------
    fn : callable
        Receives the chunk's generator and its size.
    tag : int
        Separates independent experiments that share a seed.
    threads : int, optional
        Worker cap. Results do not depend on it.
    """
    seed = resolve_seed(seed)
    bounds = chunk_bounds(total, chunk)
    jobs = [(chunk_rng(seed, tag, i), hi - lo) for i, (lo, hi) in enumerate(bounds)]
    threads = threads or default_threads()
    if threads <= 1 or len(jobs) <= 1:
        return [fn(g, n) for g, n in jobs]
    with ThreadPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def concat(parts: Sequence, axis: int = 0):
    """Concatenate chunk results (arrays or tuples of arrays)."""
    if not parts:
        raise ValueError("nothing to concatenate")
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts], axis=axis) for i in range(len(parts[0])))
    return np.concatenate(parts, axis=axis)
