"""Deterministic, chunked Monte-Carlo machinery.

Every estimator draws its randomness through :func:`collect`, which splits the
requested sample count into fixed-size chunks.  Chunk ``k`` is driven by a
Philox generator keyed by the seed with the chunk index in the top counter
word, so chunks are disjoint counter ranges and the concatenated per-sample
values do not depend on how many workers evaluated them.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

WORKERS_ENV = "LPSECTIONS_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MCConfig:
    samples: int = 100_000
    seed: int = 0
    chunk: int = 1 << 16
    workers: int | None = None

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if int(self.chunk) < 1:
            raise ValueError(f"chunk must be >= 1, got {self.chunk}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def with_samples(self, samples):
        return MCConfig(samples, self.seed, self.chunk, self.workers)


def substream(seed, index):
    """Generator for chunk ``index`` of the stream ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(index)]))


def chunk_sizes(samples, chunk):
    full, rest = divmod(int(samples), int(chunk))
    return [int(chunk)] * full + ([rest] if rest else [])


def collect(fn, mc):
    """Evaluate ``fn(rng, size)`` on every chunk and concatenate in chunk order.

    ``fn`` returns an array whose first axis has length ``size``.
    """
    sizes = chunk_sizes(mc.samples, mc.chunk)
    workers = mc.workers or default_workers()

    def run(k):
        return np.asarray(fn(substream(mc.seed, k), sizes[k]))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class Estimate:
    """Monte-Carlo mean with its standard error (sample sd / sqrt(samples))."""

    value: float
    std_error: float
    samples: int
    seed: int

    @classmethod
    def from_samples(cls, values, seed, scale=1.0):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        sd = values.std(ddof=1) if n > 1 else 0.0
        return cls(float(scale * values.mean()), float(abs(scale) * sd / np.sqrt(n)), int(n), int(seed))

    def to_dict(self):
        return asdict(self)


def paired_difference(a, b, seed):
    """Estimate of ``E[b] - E[a]`` from per-sample values drawn with common random numbers."""
    return Estimate.from_samples(np.asarray(b) - np.asarray(a), seed)


def ratio_influence(num, den):
    """Per-sample linearization of ``mean(num) / mean(den)`` (delta method).

    Returns ``(ratio, influence)``; the standard error of the ratio is
    ``influence.std(ddof=1) / sqrt(N)`` and influences of two ratios computed
    on the same samples may be subtracted to get a paired comparison.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    a, b = num.mean(), den.mean()
    return a / b, num / b - a * den / b**2


def sigma_of(influence):
    influence = np.asarray(influence, dtype=float)
    return float(influence.std(ddof=1) / np.sqrt(influence.shape[0]))
