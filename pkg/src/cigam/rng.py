"""Deterministic random-stream management.

Every sampling entry point takes an RngStream so that a (seed, stream-id)
pair fully determines the output, independent of platform, iteration
order, or worker count.  Child streams are derived by spawn-key splitting,
so two blocks sampled from sibling streams never share state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """A named, splittable random stream rooted at a 64-bit seed."""

    seed: int
    stream: tuple[int, ...] = field(default=())

    def child(self, *ids: int) -> "RngStream":
        """Derive a sub-stream; children with distinct ids are independent."""
        return RngStream(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, or a bare int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def randint_below(gen: np.random.Generator, bound: int) -> int:
    """Exact uniform integer in [0, bound) for arbitrary-precision bounds."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    if bound <= (1 << 63):
        return int(gen.integers(bound))
    bits = bound.bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        x = int.from_bytes(gen.bytes(nbytes), "little") & mask
        if x < bound:
            return x
