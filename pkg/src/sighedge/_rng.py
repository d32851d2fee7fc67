"""Seeded Brownian draws split into fixed-size path chunks.

Each chunk owns a child of ``SeedSequence(seed)``, so the numbers attached to
a given path index do not depend on how chunks are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator

import numpy as np

CHUNK = 4096


def chunk_bounds(n_paths: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, n_paths)) for s in range(0, n_paths, chunk)]


def chunk_generators(seed: int, n_paths: int, chunk: int = CHUNK) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(chunk_bounds(n_paths, chunk)))
    return [np.random.default_rng(c) for c in children]


def standard_normals(rng: np.random.Generator, n: int, n_steps: int, antithetic: bool = False) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal((n, n_steps))
    half = (n + 1) // 2
    z = rng.standard_normal((half, n_steps))
    return np.concatenate([z, -z])[:n]


def map_chunks(
    fn: Callable[[int, int, np.random.Generator], object],
    n_paths: int,
    seed: int,
    threads: int = 1,
    chunk: int = CHUNK,
) -> list:
    """Run ``fn(start, stop, rng)`` on every chunk; results returned in chunk order."""
    bounds = chunk_bounds(n_paths, chunk)
    gens = chunk_generators(seed, n_paths, chunk)
    jobs = [(s, e, g) for (s, e), g in zip(bounds, gens)]
    if threads <= 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def iter_chunks(n_paths: int, seed: int, chunk: int = CHUNK) -> Iterator[tuple[int, int, np.random.Generator]]:
    for (s, e), g in zip(chunk_bounds(n_paths, chunk), chunk_generators(seed, n_paths, chunk)):
        yield s, e, g
