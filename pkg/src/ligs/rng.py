"""Deterministic random streams with hierarchical forking.

Every source of randomness in a run hangs off one root seed. Substreams are
addressed by a path of integer stream ids, so the stream a consumer sees
depends only on (seed, path) and never on how many draws any other consumer
made. Adding an actor or a module therefore never perturbs existing streams.
"""

from __future__ import annotations

import numpy as np

# stream ids for the well-known consumers; per-actor streams fork off these
STREAM_ENV = 1
STREAM_AGENT_ACT = 2
STREAM_GENERATOR = 3
STREAM_INIT_POLICY = 4
STREAM_INIT_GENERATOR = 5
STREAM_INIT_NOVELTY = 6
STREAM_UPDATE = 7


class Rng:
    """Seeded random stream; counter-based, identical across platforms."""

    __slots__ = ("seed", "path", "gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.gen.permutation(n)

    def categorical(self, probs: np.ndarray) -> int:
        """Sample an index from a 1-d probability vector via inverse CDF."""
        c = np.cumsum(probs)
        # guard the top edge against cumulative rounding
        c[-1] = max(c[-1], 1.0)
        return int(np.searchsorted(c, self.gen.random(), side="right"))

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"


def rng_fork(parent: Rng, stream_id: int) -> Rng:
    """Child stream addressed by parent's path + stream_id.

    Same (parent seed/path, stream_id) always yields a byte-identical stream;
    distinct stream_ids yield independent streams.
    """
    if stream_id < 0:
        raise ValueError(f"stream_id must be nonnegative, got {stream_id}")
    return Rng(parent.seed, parent.path + (int(stream_id),))
