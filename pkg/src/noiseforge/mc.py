"""Seeded Monte Carlo plumbing: intervals, tests, deterministic chunked runs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "wilson_interval",
    "two_proportion_z",
    "chunk_sizes",
    "chunk_rngs",
    "parallel_map",
]

_Z95 = 1.96


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0 <= successes <= trials):
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """Pooled two-proportion z statistic; 0 when the pooled variance vanishes."""
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        return 0.0
    return (p1 - p2) / se


def chunk_sizes(total: int, chunk: int) -> list[int]:
    """Split a trial budget into fixed chunks (thread-count independent)."""
    if total < 0 or chunk < 1:
        raise ValueError("need total >= 0 and chunk >= 1")
    full, rem = divmod(total, chunk)
    return [chunk] * full + ([rem] if rem else [])


def chunk_rngs(seed: int, count: int, *key: int) -> list[np.random.Generator]:
    """Independent generators for ``count`` chunks, reproducible in (seed, key)."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key))
    return [np.random.default_rng(child) for child in ss.spawn(count)]


def parallel_map(fn: Callable, args: Sequence, threads: int = 1) -> list:
    """Apply ``fn`` over ``args`` preserving order; results are merge-order
    deterministic regardless of the worker count."""
    if threads <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, args))
