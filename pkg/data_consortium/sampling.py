"""
Seeded random streams and deterministic parallel fan-out.

Every unit of random work (one permutation, one removal chain, one cluster's
sample) gets its own PCG64 stream from ``SeedSequence([seed, stream, *keys])``.
Work is split into contiguous batches for joblib and results are rejoined in
unit order, so the worker count never changes a result.
"""

from typing import Callable, List, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

GENERATOR_STREAM = 0
PERMUTATION_STREAM = 1
CHAIN_STREAM = 2
CLUSTER_SEED_STREAM = 3
CLUSTER_SAMPLE_STREAM = 4

U = TypeVar("U")
R = TypeVar("R")


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(key) for key in keys]))


def batches(units: Sequence[U], n_batches: int) -> List[List[U]]:
    n_batches = max(1, min(n_batches, len(units)))
    bounds = np.linspace(0, len(units), n_batches + 1).astype(int)
    return [list(units[bounds[i]:bounds[i + 1]]) for i in range(n_batches)]


def fan_out(task: Callable[..., List[R]], shared, units: Sequence[U], workers: int = 1) -> List[R]:
    """Run ``task(shared, batch)`` over contiguous batches of ``units``; results keep unit order."""
    units = list(units)
    if workers <= 1 or len(units) <= 1:
        return task(shared, units)
    parts = Parallel(n_jobs=workers)(delayed(task)(shared, batch) for batch in batches(units, workers))
    return [result for part in parts for result in part]
