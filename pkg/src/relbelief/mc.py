"""Seeded, chunk-deterministic Monte Carlo estimation.

Every chunk draws from its own stream, derived from ``(seed, *key, chunk)``
through :class:`numpy.random.SeedSequence` spawn keys, so results depend only
on the seed and the chunk count, never on how many workers evaluate them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Sampler = Callable[[np.random.Generator, int], np.ndarray]
Indicator = Callable[[np.ndarray], np.ndarray]


class SamplerError(RuntimeError):
    """A sampler failed; carries the coordinates of the failing draw."""

    def __init__(self, message: str, *, chunk: int | None = None, replicate: int | None = None):
        where = []
        if chunk is not None:
            where.append(f"chunk={chunk}")
        if replicate is not None:
            where.append(f"replicate={replicate}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.chunk = chunk
        self.replicate = replicate


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the stream addressed by ``(seed, *key)``.

    Distinct keys give statistically independent streams; the same key always
    gives the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate of a probability from indicator draws."""

    mean: float
    stderr: float
    n_samples: int
    seed: int
    chunks: int

    @classmethod
    def from_counts(cls, hits: int, n_samples: int, seed: int, chunks: int) -> "MCEstimate":
        mean = hits / n_samples
        return cls(mean, math.sqrt(mean * (1.0 - mean) / n_samples), n_samples, seed, chunks)


@dataclass(frozen=True)
class BiasReport:
    """A bias value tagged with the method that produced it."""

    value: float
    method: str  # "closed-form" | "quadrature" | "monte-carlo" | "exact-sum"
    stderr: float | None = None
    n_samples: int | None = None
    details: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        out = {"value": self.value, "method": self.method, "stderr": self.stderr, "n_samples": self.n_samples}
        out.update(self.details)
        return out


def chunk_sizes(n_samples: int, chunks: int) -> list[int]:
    base, extra = divmod(n_samples, chunks)
    return [base + (1 if c < extra else 0) for c in range(chunks)]


def estimate_probability(
    indicator: Indicator,
    sampler: Sampler,
    n_samples: int,
    seed: int,
    chunks: int = 1,
    n_jobs: int = 1,
    key: Sequence[int] = (),
) -> MCEstimate:
    """Estimate ``P(indicator(X))`` for ``X`` drawn by ``sampler``.

    ``sampler(rng, size)`` returns ``size`` draws (leading axis); ``indicator``
    maps them to booleans. Chunk ``c`` uses ``stream(seed, *key, c)`` and the
    partial counts are reduced in chunk order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if chunks < 1:
        raise ValueError("chunks must be >= 1")
    sizes = chunk_sizes(n_samples, chunks)

    def run(c: int) -> int:
        if sizes[c] == 0:
            return 0
        rng = stream(seed, *key, c)
        try:
            draws = sampler(rng, sizes[c])
            hits = np.asarray(indicator(draws), dtype=bool)
        except SamplerError:
            raise
        except Exception as exc:  # coordinates are the useful part of the report
            raise SamplerError(f"sampler failed: {exc}", chunk=c) from exc
        if hits.shape[0] != sizes[c]:
            raise SamplerError(f"indicator returned {hits.shape[0]} values for {sizes[c]} draws", chunk=c)
        return int(hits.sum())

    if n_jobs == 1 or chunks == 1:
        counts = [run(c) for c in range(chunks)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            counts = list(pool.map(run, range(chunks)))
    total = 0
    for count in counts:
        total += count
    return MCEstimate.from_counts(total, n_samples, seed, chunks)


def ordered_map(func: Callable[[int], float], n: int, n_jobs: int = 1) -> list:
    """Evaluate ``func(i)`` for ``i < n``, results in index order."""
    if n_jobs == 1:
        return [func(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, range(n)))
