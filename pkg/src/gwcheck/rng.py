"""Seeded, splittable random streams and the scalar draws the samplers rely on.

A stream is identified by (master_seed, stream_id); the pair fully determines
every draw. Unit of work i (a chain, or one sampler invocation in a batch)
owns stream_id i, 1-based; permutation resampling owns stream_id 0. The
compiled kernels consume the same underlying bit generators through the C
API, so backends produce identical streams.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream", "substream", "as_generator", "RESAMPLE_STREAM_ID"]

# reserved for the row-swap resampling phase of a test run
RESAMPLE_STREAM_ID = 0


class RngStream:
    """One independently-seeded PCG64 stream with fixed draw conventions.

    The integer and permutation draws are built from uniforms with a pinned
    consumption contract (one uniform per integer; K-1 uniforms per length-K
    permutation) so that replays and cross-backend runs agree draw for draw.
    """

    __slots__ = ("master_seed", "stream_id", "generator")

    def __init__(self, master_seed: int, stream_id: int) -> None:
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    @property
    def bit_generator(self):
        return self.generator.bit_generator

    def uniform01(self) -> float:
        """One double in [0, 1)."""
        return float(self.generator.random())

    def normal(self, mean: float = 0.0, sd: float = 1.0) -> float:
        if sd < 0:
            raise ValueError("sd must be >= 0")
        # one standard normal is consumed even when sd == 0
        return float(mean + sd * self.generator.standard_normal())

    def gamma(self, shape: float, rate: float) -> float:
        """Shape-rate gamma (mean shape/rate)."""
        if shape <= 0:
            raise ValueError("shape must be > 0")
        if rate <= 0:
            raise ValueError("rate must be > 0")
        return float(self.generator.standard_gamma(shape) / rate)

    def bernoulli(self) -> int:
        """Fair coin: 1 with probability 1/2."""
        return int(self.uniform01() < 0.5)

    def uniform_int(self, k: int) -> int:
        """Uniform draw from 1..k, consuming exactly one uniform."""
        if k < 1:
            raise ValueError("k must be >= 1")
        return int(self.uniform01() * k) + 1

    def random_permutation(self, k: int) -> tuple:
        """Uniform permutation of 1..k (Fisher-Yates, k-1 uniforms)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        perm = list(range(1, k + 1))
        for i in range(k - 1, 0, -1):
            j = int(self.uniform01() * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return tuple(perm)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def substream(master_seed: int, stream_id: int) -> RngStream:
    """Derive the stream for one unit of work."""
    return RngStream(master_seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream or a raw numpy Generator; return the Generator."""
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
