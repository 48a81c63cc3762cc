"""Deterministic, splittable random streams.

Built on numpy's counter-based Philox generator: the 128-bit key is
(seed, stream_id), so two streams constructed with the same pair replay
the same sequence and distinct stream ids are statistically independent
by construction. Stream ids for sub-tasks are derived by hashing index
tuples, which makes parallel experiment output independent of scheduling
order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = (1 << 64) - 1


def derive_stream_id(*indices: int) -> int:
    """Stable 64-bit stream id from an arbitrary tuple of integer indices."""
    h = hashlib.blake2b(digest_size=8)
    for ix in indices:
        h.update(int(ix).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


class RngStream:
    """One logical random stream, owned by exactly one task at a time.

    Parameters
    ----------
    seed : int
        64-bit master seed (shared across an experiment).
    stream_id : int
        64-bit stream selector; derive per-task ids with
        :func:`derive_stream_id` or :meth:`substream`.
    """

    __slots__ = ("seed", "stream_id", "gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _U64
        self.stream_id = int(stream_id) & _U64
        key = (self.seed << 64) | self.stream_id
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, *indices: int) -> "RngStream":
        """A fresh independent stream keyed off this stream's id and ``indices``."""
        return RngStream(self.seed, derive_stream_id(self.stream_id, *indices))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
