"""Exact and brute-force references used by tests and the acceptance suite.

Everything here is independent of the strategy implementations: harmonic
numbers for the expected maximum of i.i.d. exponentials, closed-form and
dynamic-programming values for the doubling-ladder instance, an expectimax
solver for tiny full-information games, and Monte Carlo probes of the
generated-order construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from . import _kernels

MAX_DP_OPTIONS = 8
MAX_DP_VALUE = 5


def harmonic(n: int) -> Fraction:
    """H_n = 1 + 1/2 + ... + 1/n as an exact rational."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def span(lo: int, hi: int) -> Fraction:
        if hi - lo == 1:
            return Fraction(1, lo)
        mid = (lo + hi) // 2
        return span(lo, mid) + span(mid, hi)

    return span(1, n + 1)


def harmonic_float(n: int) -> float:
    """Float harmonic number via exact summation of rounded terms."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.fsum(1.0 / k for k in range(1, n + 1))


@dataclass
class MaxCheck:
    n: int
    trials: int
    mean: float
    std_error: float
    target: float
    z_score: float
    passed: bool


def expected_max_exponential_check(n: int, trials: int, seed: int) -> MaxCheck:
    """Monte Carlo mean of max of n unit exponentials against harmonic(n).

    Passes when the empirical mean is within 4 standard errors of H_n.
    """
    if trials < 10**4:
        raise ValueError("need at least 10^4 trials")
    rng = np.random.default_rng(seed)
    maxima = np.empty(trials, dtype=np.float64)
    chunk_rows = max(1, 10**7 // n)
    done = 0
    while done < trials:
        rows = min(chunk_rows, trials - done)
        block = rng.standard_exponential((rows, n))
        maxima[done : done + rows] = block.max(axis=1)
        done += rows
    mean = float(maxima.mean())
    se = float(maxima.std(ddof=1) / math.sqrt(trials))
    target = float(harmonic(n)) if n <= 10**5 else harmonic_float(n)
    z = (mean - target) / se if se > 0 else math.inf
    return MaxCheck(n, trials, mean, se, target, z, abs(z) <= 4.0)


def _check_ladder_args(k: int, theta: int, delta: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (1 <= delta <= k):
        raise ValueError(f"delta must be in [1, {k}], got {delta}")
    if not (0 <= theta <= k - delta):
        raise ValueError(f"theta must be in [0, {k - delta}], got {theta}")


def ladder_good_bad_counts(k: int, theta: int, delta: int) -> Tuple[int, int]:
    """On the doubling ladder (value j appears 2**(k-j) times, j = 0..k),
    count the options that pass a test at theta and score >= delta (good)
    versus those that pass but score < delta (bad)."""
    _check_ladder_args(k, theta, delta)
    good = sum(2 ** (k - j) for j in range(theta + delta, k + 1))
    bad = sum(2 ** (k - j) for j in range(theta + 1, theta + delta))
    return good, bad


def good_acceptance_bound(k: int, theta: int, delta: int) -> Fraction:
    """G/(B+G): the best probability of accepting a good option.

    Also checks the closed-form cap 4 * 2**-delta."""
    good, bad = ladder_good_bad_counts(k, theta, delta)
    bound = Fraction(good, bad + good)
    assert bound <= Fraction(4, 2**delta)
    return bound


def good_acceptance_dp(k: int, theta: int, delta: int) -> Fraction:
    """Exact optimum of P(accept a good option) over commit/observe policies.

    State (t, b, g): t options left, b bad and g good among them, uniform
    random order. Commit tests the next option at theta and accepts a pass;
    observe reveals the next option and moves on. Exact rationals throughout;
    must equal G/(B+G) at the initial state.
    """
    if k > 6:
        raise ValueError("state space too large beyond k = 6")
    good, bad = ladder_good_bad_counts(k, theta, delta)
    n = 2 ** (k + 1) - 1

    @lru_cache(maxsize=None)
    def value(t: int, b: int, g: int) -> Fraction:
        if g == 0:
            return Fraction(0)
        if b + g == t:
            skip = Fraction(0)
        else:
            skip = Fraction(t - b - g, t) * value(t - 1, b, g)
        commit = skip + Fraction(g, t)
        observe = (
            skip
            + Fraction(g, t) * value(t - 1, b, g - 1)
            + (Fraction(b, t) * value(t - 1, b - 1, g) if b else Fraction(0))
        )
        return max(commit, observe)

    result = value(n, bad, good)
    value.cache_clear()
    return result


def optimal_online_dp(counts_in) -> Fraction:
    """Exact optimal expected score with full information, uniform order.

    ``counts_in`` is either a mapping value -> multiplicity or an iterable of
    integer values. Values must be integers in [0, 5] and the multiset at most
    8 options; the player tests at integer thresholds (sufficient for integer
    values), observes exactly on failure, and may accept untested.
    """
    if isinstance(counts_in, dict):
        items = [(v, int(c)) for v, c in counts_in.items() if c > 0]
    else:
        seen: Dict[int, int] = {}
        for v in counts_in:
            seen[v] = seen.get(v, 0) + 1
        items = list(seen.items())
    if not items:
        raise ValueError("multiset must be nonempty")
    if any(v != int(v) for v, _ in items):
        raise ValueError("values must be integers")
    counts = {int(v): c for v, c in items}
    total = sum(counts.values())
    vmax = max(counts)
    if total > MAX_DP_OPTIONS:
        raise ValueError(f"at most {MAX_DP_OPTIONS} options, got {total}")
    if vmax > MAX_DP_VALUE or min(counts) < 0:
        raise ValueError(f"values must be integers in [0, {MAX_DP_VALUE}]")

    values = sorted(counts)
    base = tuple(counts[v] for v in values)

    def tail_count(state: Tuple[int, ...], s: int) -> int:
        return sum(c for v, c in zip(values, state) if v > s)

    @lru_cache(maxsize=None)
    def step_value(state: Tuple[int, ...]) -> Fraction:
        t = sum(state)
        if t == 0:
            return Fraction(0)
        # accept untested: the full expected value of an unknown option
        best = Fraction(sum(v * c for v, c in zip(values, state)), t)
        for target in range(0, vmax + 1):
            best = max(best, _tested(state, -1, target))
        return best

    def _tested(state: Tuple[int, ...], s: int, target: int) -> Fraction:
        """Raise spend from s to target on the current option (s = -1 means
        untested); failures are observed, rejected and recursed."""
        t_here = tail_count(state, s) if s >= 0 else sum(state)
        out = Fraction(0)
        for v, c in zip(values, state):
            if c == 0 or v <= s or v > target:
                continue
            nxt = list(state)
            nxt[values.index(v)] -= 1
            out += Fraction(c, t_here) * step_value(tuple(nxt))
        passing = tail_count(state, target)
        if passing:
            out += Fraction(passing, t_here) * alive_value(state, target)
        return out

    @lru_cache(maxsize=None)
    def alive_value(state: Tuple[int, ...], s: int) -> Fraction:
        """Best value given the current option survived a cumulative spend of
        s (so its value is > s), before deciding to accept, test more, or
        observe out."""
        passing = tail_count(state, s)
        assert passing > 0
        # accept now
        best = Fraction(
            sum((v - s) * c for v, c in zip(values, state) if v > s), passing
        )
        # target = vmax fails every alive option: that is the observe-and-
        # reject branch, so no separate case is needed
        for target in range(s + 1, vmax + 1):
            best = max(best, _tested(state, s, target))
        return best

    result = step_value(base)
    step_value.cache_clear()
    alive_value.cache_clear()
    return result


def two_level_risky_conditional(delta: int) -> Fraction:
    """Chance the next value sits delta above the threshold when only the
    levels theta+1 and theta+delta are active: 2**-d / (2**-1 + 2**-d)."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    return Fraction(1, 2**delta) / (Fraction(1, 2) + Fraction(1, 2**delta))


@dataclass
class RiskyWinReport:
    k: int
    theta: int
    delta: int
    sequences: int
    p_hat: float
    std_error: float
    bound: float
    passed: bool


def risky_win_check(
    k: int, theta: int, delta: int, sequences: int = 200, seed: int = 7
) -> RiskyWinReport:
    """Monte Carlo probe of the generated-order instance: the chance that the
    next value lands exactly theta+delta, among steps where theta+1 is still
    active, must stay below 2**(1-delta) (plus 3 cluster standard errors).
    """
    if delta < 3:
        raise ValueError("probe is stated for delta >= 3")
    _check_ladder_args(k, theta, delta)
    hits, actives = _kernels.genorder_risky_probe(
        k, theta, delta, sequences, 0, np.uint64(seed), 10**9
    )
    mask = actives > 0
    ratios = hits[mask] / actives[mask]
    p_hat = float(hits.sum() / actives.sum())
    se = float(ratios.std(ddof=1) / math.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
    bound = 2.0 ** (1 - delta)
    return RiskyWinReport(
        k, theta, delta, sequences, p_hat, se, bound, p_hat <= bound + 3 * se
    )
