"""Fixed 64-bit PRNG (splitmix64) and the shuffles built on it.

Every random choice the engine makes flows through this module so that a
seed reproduces bit-identical results across runs and across
implementations of the same file formats.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64 stream: state += golden ratio, then two xor-multiply mixes."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform-ish draw in [0, n) by modulo; bias is < n / 2**64."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        return self.next_u64() % n


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n), driven by splitmix64(seed)."""
    rng = SplitMix64(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def fnv1a64(text: str) -> int:
    """FNV-1a hash of the UTF-8 bytes; used to derive per-cell seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h
