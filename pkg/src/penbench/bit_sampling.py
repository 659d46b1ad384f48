"""Committing to a bit of an unknown-length majority-ones sequence.

The adversary fixes a bit sequence in which strictly more than half the bits
are 1; its length is unknown to the player. The player watches bits one by
one and may commit to the next unseen bit at any point, winning when the
committed bit is 1. The implemented player tracks ``delta`` (zeros seen minus
ones seen) and commits to the next bit with probability ``2**-(delta + 2)``,
clamped to 1 once delta <= -2. This wins with probability at least 1/6
against every valid sequence; :func:`min_win_prob_exhaustive` certifies that
exactly for all short sequences.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from .rng import Stream


class InvalidSequence(ValueError):
    pass


def _as_bits(seq) -> List[int]:
    if isinstance(seq, str):
        bits = [int(c) for c in seq]
    else:
        bits = [int(b) for b in seq]
    if any(b not in (0, 1) for b in bits):
        raise InvalidSequence("bits must be 0 or 1")
    return bits


def is_valid_sequence(seq) -> bool:
    """Strictly more ones than half the length, nonempty."""
    bits = _as_bits(seq)
    return len(bits) >= 1 and 2 * sum(bits) > len(bits)


def commit_probability(delta: int) -> float:
    """Commit chance before the next bit given zeros-minus-ones = delta."""
    if delta <= -2:
        return 1.0
    return 2.0 ** (-(delta + 2))


def commit_probability_exact(delta: int) -> Fraction:
    if delta <= -2:
        return Fraction(1)
    return Fraction(1, 2 ** (delta + 2))


def play_game(seq, rng: Stream) -> bool:
    """Simulate the committing player on one sequence; True on a win."""
    bits = _as_bits(seq)
    if not is_valid_sequence(bits):
        raise InvalidSequence("sequence must contain a strict majority of ones")
    delta = 0
    for b in bits:
        if rng.uniform() < commit_probability(delta):
            return b == 1
        delta += 1 if b == 0 else -1
    return False


def exact_win_prob(seq) -> Fraction:
    """Win probability of the committing player, in exact rationals.

    sum over positions i with bit 1 of p_i * prod_{j<i} (1 - p_j), where p_j
    is the commit probability at the delta reached before bit j. Sequences
    longer than 10**4 bits fall back to floats (error below 1e-12).
    """
    bits = _as_bits(seq)
    if not is_valid_sequence(bits):
        raise InvalidSequence("sequence must contain a strict majority of ones")
    if len(bits) > 10**4:
        return _win_prob_float(bits)  # type: ignore[return-value]
    delta = 0
    alive = Fraction(1)
    won = Fraction(0)
    for b in bits:
        p = commit_probability_exact(delta)
        if b == 1:
            won += alive * p
        alive *= 1 - p
        delta += 1 if b == 0 else -1
    return won


def _win_prob_float(bits: Sequence[int]) -> float:
    delta = 0
    alive = 1.0
    won = 0.0
    for b in bits:
        p = commit_probability(delta)
        if b == 1:
            won += alive * p
        alive *= 1.0 - p
        delta += 1 if b == 0 else -1
    return won


def valid_sequences(m_max: int) -> Iterable[List[int]]:
    """All majority-ones sequences of length 1..m_max (lexicographic per m)."""
    for m in range(1, m_max + 1):
        for mask in range(1 << m):
            bits = [(mask >> (m - 1 - i)) & 1 for i in range(m)]
            if 2 * sum(bits) > m:
                yield bits


def min_win_prob_exhaustive(m_max: int) -> Tuple[Fraction, List[int]]:
    """Exact minimum of the win probability over all valid sequences."""
    if m_max > 20:
        raise ValueError("exhaustive search capped at length 20")
    best: Fraction | None = None
    witness: List[int] = []
    for bits in valid_sequences(m_max):
        p = exact_win_prob(bits)
        if best is None or p < best:
            best = p
            witness = bits
    assert best is not None
    return best, witness


def inductive_bound(delta: int) -> Fraction:
    """(1/3) * (1 - 2**-(delta+1)); defined for delta >= 0 only."""
    if delta < 0:
        raise ValueError("bound stated only for delta >= 0")
    return Fraction(1, 3) * (1 - Fraction(1, 2 ** (delta + 1)))


def suffix_bound_violations(m_max: int) -> List[Tuple[List[int], int, Fraction, Fraction]]:
    """Check every suffix state of every valid sequence up to length m_max.

    For a valid sequence and a position i where the prefix delta is >= 0, the
    exact continuation win probability from i must be at least
    inductive_bound(delta). Returns the (sequence, position, continuation,
    bound) tuples that violate this; an empty list certifies the bound.
    """
    violations = []
    for bits in valid_sequences(m_max):
        m = len(bits)
        deltas = [0] * (m + 1)
        for i, b in enumerate(bits):
            deltas[i + 1] = deltas[i] + (1 if b == 0 else -1)
        # continuation win prob from position i with entry delta deltas[i]
        cont = [Fraction(0)] * (m + 1)
        for i in range(m - 1, -1, -1):
            p = commit_probability_exact(deltas[i])
            win_now = p if bits[i] == 1 else Fraction(0)
            cont[i] = win_now + (1 - p) * cont[i + 1]
        for i in range(m):
            if deltas[i] >= 0 and cont[i] < inductive_bound(deltas[i]):
                violations.append((bits, i, cont[i], inductive_bound(deltas[i])))
    return violations


def naive_guess_win_prob(seq, n_max: int) -> Fraction:
    """Baseline for comparison: guess a power-of-two length, sample uniformly.

    The player picks g uniformly from {2**0, ..., 2**ceil(log2 n_max)} and
    commits to a uniformly random position in [1, g]; positions past the end
    of the sequence lose. Exact win probability.
    """
    bits = _as_bits(seq)
    if not is_valid_sequence(bits):
        raise InvalidSequence("sequence must contain a strict majority of ones")
    jmax = max(0, (n_max - 1).bit_length())
    total = Fraction(0)
    for j in range(jmax + 1):
        g = 2**j
        ones_in_window = sum(bits[: min(g, len(bits))])
        total += Fraction(ones_in_window, g)
    return total / (jmax + 1)
