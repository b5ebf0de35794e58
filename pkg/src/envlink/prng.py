"""Pinned deterministic PRNG (SplitMix64).

Every seeded behavior in the toolkit (environment resets, random policies,
the Q-learner's exploration) draws from this generator so independent
implementations reproduce identical streams bit for bit.
"""

from __future__ import annotations

import secrets

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream over a 64-bit state."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        if not (0 <= seed <= _MASK64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._state = seed

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1): high 53 bits of the next output / 2**53."""
        return (self.next_u64() >> 11) * 2.0 ** -53


def entropy_seed() -> int:
    """Fresh unsigned 64-bit seed from OS entropy."""
    return secrets.randbits(64)
