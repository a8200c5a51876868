"""Counter-based uniform streams.

Every stream is a Philox4x64 generator keyed by ``(seed, stream_id)``; the
pair fully determines the sequence, so replays need no state files.
Draws are mapped into the open interval (0, 1) as ``(k + 0.5) / 2**53``
where ``k`` is the top 53 bits of a raw 64-bit output.
"""

from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_NAME = "numpy.random.Philox(4x64-10), key=seed|stream_id<<64"

_MASK64 = (1 << 64) - 1
_SCALE = 1.0 / float(1 << 53)


class StreamError(RuntimeError):
    """Raised when a bounded stream runs out of draws."""


def raw_to_open_unit(raw: np.ndarray) -> np.ndarray:
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _SCALE


class UniformStream:
    """Replayable sequence of uniforms on (0, 1).

    ``limit`` optionally bounds the number of draws; reading past it raises
    :class:`StreamError`.  ``forced`` replaces the generator by a fixed
    list of values (used for hand traces and degenerate checks).
    """

    _CHUNK = 4096

    def __init__(self, seed: int, stream_id: int = 0, limit: int | None = None,
                 forced=None):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.limit = limit
        self.cursor = 0
        self._forced = None if forced is None else np.asarray(forced, dtype=np.float64)
        if self._forced is not None:
            if np.any((self._forced <= 0) | (self._forced >= 1)):
                raise ValueError("forced draws must lie in (0, 1)")
            self.limit = len(self._forced) if limit is None else min(limit, len(self._forced))
        self._bitgen = np.random.Philox(key=self.seed | (self.stream_id << 64))
        self._buf = np.empty(0)
        self._pos = 0

    @classmethod
    def from_values(cls, values) -> "UniformStream":
        return cls(0, 0, forced=values)

    def _refill(self, need: int) -> None:
        if self._forced is not None:
            self._buf = self._forced
            self._pos = self.cursor
            return
        n = max(self._CHUNK, need)
        rest = self._buf[self._pos:]
        self._buf = np.concatenate([rest, raw_to_open_unit(self._bitgen.random_raw(n))])
        self._pos = 0

    def _check(self, n: int) -> None:
        if self.limit is not None and self.cursor + n > self.limit:
            raise StreamError(f"stream exhausted after {self.limit} draws")

    def next(self) -> float:
        self._check(1)
        if self._pos >= len(self._buf):
            self._refill(1)
        u = float(self._buf[self._pos])
        self._pos += 1
        self.cursor += 1
        return u

    def take(self, n: int) -> np.ndarray:
        """Return the next ``n`` draws as a float64 array."""
        self._check(n)
        if len(self._buf) - self._pos < n:
            self._refill(n)
        out = self._buf[self._pos:self._pos + n].copy()
        self._pos += n
        self.cursor += n
        return out

    def replay(self) -> "UniformStream":
        """A fresh stream positioned at draw 0 of the same sequence."""
        forced = None if self._forced is None else self._forced
        return UniformStream(self.seed, self.stream_id, self.limit, forced)

    def spawn(self, stream_id: int) -> "UniformStream":
        return UniformStream(self.seed, stream_id)

    def metadata(self) -> dict:
        return {"generator": GENERATOR_NAME, "seed": self.seed,
                "streamId": self.stream_id, "cursor": self.cursor}


def seed_sequence(master_seed: int, replicate: int) -> int:
    """Stream id for replicate ``replicate`` of a master seed.

    Injective in ``replicate`` for a fixed master seed: the low 32 bits hold
    the replicate index, the high 32 bits a hash of the master seed.
    """
    if replicate < 0 or replicate >= 1 << 32:
        raise ValueError("replicate index must lie in [0, 2**32)")
    h = hashlib.blake2b(int(master_seed & _MASK64).to_bytes(8, "little"),
                        digest_size=4).digest()
    return (int.from_bytes(h, "little") << 32) | replicate


def numpy_generator(seed: int, stream_id: int = 0) -> np.random.Generator:
    """A numpy Generator over the same counter-based bit generator."""
    return np.random.Generator(np.random.Philox(key=(int(seed) & _MASK64)
                                                | ((int(stream_id) & _MASK64) << 64)))
