"""
Replica seeding and order-independent Monte Carlo execution.

Every replica owns a random stream derived from ``(master_seed, index)``
through :class:`numpy.random.SeedSequence` spawn keys.  Replicas are grouped
in fixed-size chunks whose boundaries depend only on the replica index, so a
chunk is computed identically whether it runs in-process or in a worker
process; results are concatenated in chunk order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

CHUNK = 256

_PAYLOAD: Callable | None = None


def replica_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


def replica_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(replica_seed(master_seed, index))


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _set_payload(fn):
    global _PAYLOAD
    _PAYLOAD = fn


def _run_chunk(bounds):
    return _PAYLOAD(*bounds)


def run_replicas(fn: Callable[[int, int], np.ndarray], n_samples: int,
                 workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Evaluate ``fn(start, stop)`` over fixed replica chunks.

    ``fn`` must return an array whose first axis has ``stop - start`` rows,
    one per replica.  Output rows are in replica order for any ``workers``.
    """
    bounds = [(s, min(s + chunk, n_samples)) for s in range(0, n_samples, chunk)]
    if not bounds:
        return np.empty(0)
    if workers <= 1 or len(bounds) == 1:
        parts = [fn(s, e) for s, e in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_set_payload,
                                 initargs=(fn,)) as pool:
            parts = list(pool.map(_run_chunk, bounds))
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error."""

    mean: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, values) -> "Estimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n == 0:
            return cls(float("nan"), float("nan"), 0)
        sd = values.std(ddof=1) if n > 1 else 0.0
        return cls(float(values.mean()), float(sd / np.sqrt(n)), n)

    @classmethod
    def exact(cls, value: float, n: int = 0) -> "Estimate":
        return cls(float(value), 0.0, n)
