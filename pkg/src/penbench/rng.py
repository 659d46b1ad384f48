"""Deterministic 64-bit random streams shared by the Python engine and the
compiled kernels.

All randomness in penbench flows through ``Stream``, a splitmix64 generator.
The compiled kernels re-implement the identical integer recurrence, so a game
played through the object engine and the same game played through a kernel
consume random numbers in exactly the same order and produce bitwise-equal
scores.

Per-trial streams are derived from a 64-bit master seed with the documented
mix below: trial ``i`` owns two independent lanes, one for instance values
(lane 0) and one for strategy decisions (lane 1).
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_LANE_SALT = 0xA0761D6478BD642F


def mix64(z: int) -> int:
    """splitmix64 output scrambler (a 64-bit bijection)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def substream_seed(master_seed: int, index: int) -> int:
    """Derive the starting state of substream ``index`` from a master seed.

    The mix is ``mix64(mix64(master ^ SALT) + GOLDEN * (index + 1))``; distinct
    indexes give distinct, decorrelated states.
    """
    z = mix64((master_seed & _MASK) ^ _LANE_SALT)
    return mix64((z + _GOLDEN * ((index & _MASK) + 1)) & _MASK)


def trial_seed(master_seed: int, trial: int, lane: int) -> int:
    """Seed for lane ``lane`` (0 = values, 1 = strategy) of trial ``trial``."""
    return substream_seed(master_seed, 2 * trial + lane)


class Stream:
    """Sequential splitmix64 stream with the draw helpers the engine needs."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo reduction; the bias is < n/2**64."""
        return self.u64() % n

    def exponential(self, rate: float = 1.0) -> float:
        return -math.log1p(-self.uniform()) / rate

    def coin(self) -> bool:
        """Fair coin: True with probability 1/2."""
        return self.uniform() < 0.5

    def choice_index(self, cum_weights) -> int:
        """Smallest ``i`` with ``u < cum_weights[i]`` for one uniform ``u``.

        ``cum_weights`` must be nondecreasing with last entry >= 1.
        """
        u = self.uniform()
        for i, c in enumerate(cum_weights):
            if u < c:
                return i
        return len(cum_weights) - 1

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates shuffle (mutable sequence or numpy array)."""
        for i in range(len(values) - 1, 0, -1):
            j = self.randbelow(i + 1)
            values[i], values[j] = values[j], values[i]

    def geometric_level(self) -> int:
        """Level j >= 0 with probability 2**-(j+1).

        Inverse CDF on one 64-bit uniform: the level is the number of leading
        zero bits, clamped to 62 (the clamp fires with probability < 2**-63).
        """
        u = self.u64()
        j = 0
        bit = 1 << 63
        while j < 62 and not (u & bit):
            j += 1
            bit >>= 1
        return j
