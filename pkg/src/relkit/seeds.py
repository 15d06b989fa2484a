"""Deterministic seed streams for reproducible generation.

The generator is part of the on-disk reproducibility contract: a manifest
records only ``root_seed``, so the byte content of every image is pinned by
the algorithm below.  Changing it is a format break.

Algorithm
---------
Draws come from a counter-based splitmix64 sequence.  The mixing function is
the standard splitmix64 finalizer (xorshift-multiply):

    mix(z): z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27;  z *= 0x94D049BB133111EB
            z ^= z >> 31                             (all mod 2**64)

A stream is identified by ``(root_seed, stream_index)`` and has initial state

    state0 = mix(root_seed XOR mix(stream_index + GAMMA))

with GAMMA = 0x9E3779B97F4A7C15.  The n-th draw (n = 0, 1, ...) is

    draw(n) = mix(state0 + (n + 1) * GAMMA)

which equals the ordinary splitmix64 sequence seeded at ``state0``.  Because
draws are a pure function of (root_seed, stream_index, n), generation order
and parallelism cannot change outputs.

Stream-index namespaces
-----------------------
Dataset construction gives every object, split shuffle, pair selection, and
stimulus placement its own stream.  Indices are partitioned by a purpose tag
in the high bits (see ``stream_id``), so adding a new consumer never shifts
existing sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# purpose tags for stream_id(); values are frozen, append-only
PURPOSE_OBJECT = 1
PURPOSE_SPLIT = 2
PURPOSE_PAIRS = 3
PURPOSE_PLACEMENT = 4
PURPOSE_SINGLE = 5
PURPOSE_DISSOC = 6
PURPOSE_VARIANT = 7


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int (mod 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # vectorized twin of mix64; uint64 wrap-around is the point here
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


def stream_id(purpose: int, index: int) -> int:
    """Compose a stream_index from a purpose tag and a local index.

    Local indices may use up to 40 bits; purposes are small integers.
    """
    if not 0 <= index < (1 << 40):
        raise ValueError(f"local stream index out of range: {index}")
    return ((purpose << 40) | index) & MASK64


@dataclass
class SeedStream:
    """One reproducible draw sequence, identified by (root_seed, stream_index)."""

    root_seed: int
    stream_index: int
    _cursor: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        self.root_seed &= MASK64
        self.stream_index &= MASK64
        self._state0 = mix64(self.root_seed ^ mix64((self.stream_index + GAMMA) & MASK64))

    def draw_at(self, n: int) -> int:
        """The n-th u64 of this stream, independent of cursor position."""
        return mix64((self._state0 + (n + 1) * GAMMA) & MASK64)

    def next_u64(self) -> int:
        v = self.draw_at(self._cursor)
        self._cursor += 1
        return v

    def u64_array(self, count: int) -> np.ndarray:
        """Next `count` draws as uint64, advancing the cursor."""
        base = self._cursor
        self._cursor += count
        idx = np.arange(base + 1, base + count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self._state0) + idx * np.uint64(GAMMA)
        return _mix64_array(states)

    def uniform(self) -> float:
        """One float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_array(self, count: int) -> np.ndarray:
        return (self.u64_array(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n) via the multiply-shift bound map."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        return (self.next_u64() * n) >> 64

    def shuffle(self, items: list) -> list:
        """Fisher-Yates; returns a new list, input untouched."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.randint(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def choice(self, items):
        return items[self.randint(len(items))]


def derive_stream(root_seed: int, stream_index: int) -> SeedStream:
    """Create the stream for (root_seed, stream_index).  Pure; see module docs."""
    return SeedStream(root_seed, stream_index)
