"""Counter-based random streams and a deterministic block runner.

Paths are grouped into fixed-size blocks; block ``b`` of a computation tagged
``tag`` always draws from ``Philox(SeedSequence([seed, crc32(tag), b]))``.
Results are reduced in block order, so output is independent of how many
worker threads ran the blocks.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 256


def stream(seed: int, tag: str, block: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode()), int(block)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def thread_cap() -> int:
    raw = os.environ.get("LAGMMSE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def block_sizes(n_paths: int, block: int = BLOCK):
    full, rest = divmod(int(n_paths), block)
    return [block] * full + ([rest] if rest else [])


def run_blocks(func, seed: int, tag: str, sizes, first_block: int = 0):
    """Call ``func(rng, n)`` for each block and return results in block order."""
    jobs = [(first_block + i, n) for i, n in enumerate(sizes)]

    def one(job):
        b, n = job
        return func(stream(seed, tag, b), n)

    workers = min(thread_cap(), len(jobs)) or 1
    if workers == 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))
