"""Seed derivation and bounded parallelism helpers.

All randomized stages draw from streams derived from one master seed plus a
stage tag, so changing e.g. the fold draw does not perturb codebook
initialization. Parallel maps preserve input order and run each item with
identical arithmetic, so results are independent of the thread count.
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def _tag_to_int(tag) -> int:
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derived_rng(seed: int, *tags) -> np.random.Generator:
    """Generator for stage ``tags`` under master ``seed`` (stable across runs)."""
    entropy = [int(seed)] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derived_seed(seed: int, *tags) -> int:
    """64-bit integer seed derived from ``seed`` and ``tags``."""
    material = ":".join([str(int(seed))] + [str(t) for t in tags])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map ``fn`` over ``items``, optionally on a thread pool.

    Results come back in input order; with threads == 1 this is a plain loop.
    Item computations must not share mutable state, which every caller in
    this package guarantees, so the output is identical for any thread count.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))
