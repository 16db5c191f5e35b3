"""SplitMix64: the counter-based generator behind every seeded choice.

Selections are part of the output contract (manifests must reproduce across
platforms and Python versions), so the stdlib ``random`` module, whose
algorithms may change between releases, is not used.

State advances by the golden-ratio increment ``0x9E3779B97F4A7C15``; output
mixing uses the multipliers ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``
with shifts 30, 27 and 31 (Steele, Lea & Flood, 2014).
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> list:
        """Fisher-Yates in place; returns ``items`` for chaining."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, items, k: int) -> list:
        """``k`` distinct items, uniformly, without replacement (partial Fisher-Yates)."""
        pool = list(items)
        if not 0 <= k <= len(pool):
            raise ValueError("sample size out of range")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def split(self, *key) -> "SplitMix64":
        """Independent child stream derived from the current seed and a key."""
        h = hashlib.blake2b(repr(key).encode("utf-8"), digest_size=8).digest()
        return SplitMix64(mix64(self.state ^ int.from_bytes(h, "little")))


def derive_seed(seed: int, *key) -> int:
    return SplitMix64(seed).split(*key).next_u64()
