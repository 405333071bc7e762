"""Deterministic 64-bit PRNG for scenario generation.

xoshiro256** seeded through splitmix64, all arithmetic mod 2**64.  The
generator and every helper below are integer-only, so identical seeds give
identical scenarios on any platform or implementation of this format.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1

T = TypeVar("T")


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


class Xoshiro256StarStar:
    """xoshiro256** with helpers for unbiased bounded draws."""

    def __init__(self, seed: int) -> None:
        state = seed & MASK64
        s = []
        for _ in range(4):
            out, state = splitmix64_next(state)
            s.append(out)
        # all-zero state is invalid for xoshiro; splitmix64 cannot produce it
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo bias."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        threshold = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < threshold:
                return x % n

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq: Sequence[T], count: int) -> list[T]:
        """count distinct elements via partial Fisher-Yates over indices."""
        n = len(seq)
        if count > n:
            raise ValueError("sample larger than population")
        idx = list(range(n))
        for i in range(count):
            j = i + self.randrange(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return [seq[idx[i]] for i in range(count)]

    def weighted_index(self, weights: Sequence[int]) -> int:
        """Index drawn proportionally to nonnegative integer weights."""
        total = 0
        for w in weights:
            if w < 0:
                raise ValueError("negative weight")
            total += w
        if total <= 0:
            raise ValueError("weights sum to zero")
        r = self.randrange(total)
        acc = 0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        raise AssertionError("unreachable")


def derive_seed(seed: int, stream_id: int) -> int:
    """Pure mix of a base seed and a stream id, for independent substreams."""
    out1, state = splitmix64_next((seed ^ (stream_id * 0xA24BAED4963EE407)) & MASK64)
    out2, _ = splitmix64_next(state)
    return (out1 ^ _rotl(out2, 23)) & MASK64
