"""
Counter-based random streams, one per Monte Carlo run.

A stream family is a Philox4x64 key derived from the master seed and a tuple
of integer tags. Run ``r`` of an ensemble with ``m`` measurements reads
``4*C`` uniforms (``C = ceil((m + 1)/4)`` counter blocks) starting at
counter block ``r*C``. The first ``m`` uniforms become waiting times and
uniform ``m`` drives the survival draw. Runs occupy disjoint contiguous
counter ranges, so any partition of the runs into chunks reproduces exactly
the same numbers.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError

GENERATOR_ID = f"numpy.random.Philox4x64(SeedSequence key)/numpy-{np.__version__}"
SEED_MAX = (1 << 64) - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ArgumentError("seed must be an unsigned 64-bit integer")
    return seed


def stream_key(seed: int, *tags: int) -> np.ndarray:
    """128-bit Philox key for the stream family ``(seed, *tags)``."""
    return np.random.SeedSequence([check_seed(seed), *map(int, tags)]).generate_state(2, np.uint64)


def blocks_per_run(m: int) -> int:
    return (m + 1 + 3) // 4


def run_uniforms(key: np.ndarray, first_run: int, n_runs: int, m: int) -> np.ndarray:
    """Uniforms for runs ``first_run .. first_run + n_runs - 1``, shape ``(n_runs, 4*C)``."""
    c = blocks_per_run(m)
    bitgen = np.random.Philox(key=key, counter=first_run * c)
    return np.random.Generator(bitgen).random(n_runs * 4 * c).reshape(n_runs, 4 * c)


def chunk_bounds(n_runs: int, m: int, target_elements: int = 1 << 18) -> list[tuple[int, int]]:
    """Fixed partition of ``range(n_runs)``; independent of the thread count."""
    per_chunk = max(1, target_elements // (4 * blocks_per_run(m)))
    return [(lo, min(lo + per_chunk, n_runs)) for lo in range(0, n_runs, per_chunk)]
