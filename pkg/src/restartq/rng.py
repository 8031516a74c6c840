"""Reproducible multi-stream random number generation.

All randomness in the package flows through splitmix64 streams: a 64-bit
Weyl sequence passed through the splitmix64 finalizer.  The generator is
deliberately tiny so that the compiled simulation kernel can carry a
bit-identical C copy of it; a pure-Python run and a compiled run of the
same configuration therefore consume and produce exactly the same numbers.

A stream is addressed by ``(seed, stream_id)``.  The same pair always
yields the same sequence.  Replications derive fresh seeds with
``derive_seed(master_seed, replica_index)`` and then open their own
streams, so replicas never share state and can be merged in any order.

Uniform draws are mapped into the open interval (0, 1) via
``((x >> 11) + 0.5) * 2**-53`` so inverse-transform sampling never sees
an endpoint.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_TWEAK = 0x9E3779B97F4A7C15
_DERIVE_TWEAK = 0xD1B54A32D192ED03

# Stream ids used by the simulation engine; anything else is free for
# callers to use.
STREAM_GENERAL = 0
STREAM_ARRIVALS = 1
STREAM_CLASSES = 2
STREAM_SIZES = 3
STREAM_FAILURES = 4

_U53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer: a bijective scramble of a 64-bit word."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_state(seed: int, stream_id: int) -> int:
    """Initial Weyl state for the stream ``(seed, stream_id)``."""
    return mix64(mix64(seed) ^ mix64((stream_id + _STREAM_TWEAK) & _MASK64))


def derive_seed(seed: int, index: int) -> int:
    """A child seed for replica/sample ``index``, independent of streams."""
    return mix64(mix64(seed) ^ mix64((index + _DERIVE_TWEAK) & _MASK64))


class RngStream:
    """Single-owner uniform random stream.

    Not thread-safe; concurrent consumers must open distinct stream ids.
    """

    __slots__ = ("seed", "stream_id", "state")

    def __init__(self, seed: int, stream_id: int = STREAM_GENERAL):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.state = stream_state(self.seed, self.stream_id)

    @classmethod
    def from_state(cls, state: int) -> "RngStream":
        """A stream resumed from a raw Weyl state (seed metadata unknown)."""
        s = cls.__new__(cls)
        s.seed = 0
        s.stream_id = 0
        s.state = int(state) & _MASK64
        return s

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform draw strictly inside (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _U53

    def uniforms(self, n: int) -> np.ndarray:
        """Vectorized batch of ``n`` uniforms, identical to ``n`` calls of
        :meth:`next_float` (the Weyl/finalizer path is exact integer math)."""
        idx = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN) + np.uint64(self.state)
        z = idx
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        if n:
            self.state = int(idx[-1])
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _U53

    def clone(self) -> "RngStream":
        other = RngStream.__new__(RngStream)
        other.seed = self.seed
        other.stream_id = self.stream_id
        other.state = self.state
        return other

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
