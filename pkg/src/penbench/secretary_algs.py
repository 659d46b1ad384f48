"""Strategies for the secretary setting, one per information/order regime.

Information regimes: full (the value multiset is known), optimum (only the
maximum), hint (an arbitrary scalar in [0, max]), none. Order regimes:
uniformly random or arbitrary. The bucket count ``k`` is floor(log2 n) + 2
for random order and 2*floor(log2 n) + 2 for arbitrary order.
"""

from __future__ import annotations

import math
from typing import List, Sequence

from .bit_sampling import commit_probability
from .engine import ACCEPT, REJECT, Strategy, Test
from .prophet_algs import SingleThreshold, _uniform_cum_weights
from .rng import Stream


def bucket_count_random_order(n: int) -> int:
    """floor(log2 n) + 2, so that 2**(k-1) > n."""
    return int(math.floor(math.log2(n))) + 2 if n >= 1 else 2


def bucket_count_arbitrary_order(n: int) -> int:
    return 2 * int(math.floor(math.log2(n))) + 2 if n >= 1 else 2


def bucket_counts(values: Sequence[float], reference: float, k: int) -> List[int]:
    """n_j = #{a_i in ((j-1)/k * ref, j/k * ref]} for j = 1..k (index 1..k).

    Index 0 is unused. Boundary ties fall in the lower bucket.
    """
    counts = [0] * (k + 1)
    if reference <= 0.0:
        return counts
    for v in values:
        if v <= 0.0 or v > reference:
            continue
        counts[bucket_of(v, reference, k)] += 1
    return counts


def bucket_of(v: float, reference: float, k: int) -> int:
    """Bucket index in 1..k of a value in (0, reference]; ties go lower.

    Clamped at both ends: rounding may push v * k / reference past k even
    though v <= reference.
    """
    j = math.ceil(v * k / reference)
    if j < 1:
        return 1
    if j > k:
        return k
    return j


def suffix_counts(counts: Sequence[int]) -> List[int]:
    """n_{>=j} = n_j + ... + n_k (index 0 unused)."""
    k = len(counts) - 1
    out = [0] * (k + 2)
    for j in range(k, 0, -1):
        out[j] = out[j + 1] + counts[j]
    return out


class AcceptUntested(Strategy):
    """Accept the first option without testing (score = its full value)."""

    def on_step_begin(self, index, ctx):
        return ACCEPT

    def on_outcome(self, outcome):  # pragma: no cover - never tested
        raise AssertionError("accept-untested strategy never tests")


def warmup_full_info(values: Sequence[float]) -> Strategy:
    """Full information, random order: deterministic bucket threshold.

    Finds the smallest j* with n_{j*} < n_{>= j*+1} (one always exists) and
    runs a single threshold at (j*-1)/k times the maximum.
    """
    a1 = max(values)
    n = len(values)
    if a1 <= 0.0:
        return AcceptUntested()
    k = bucket_count_random_order(n)
    counts = bucket_counts(values, a1, k)
    suffix = suffix_counts(counts)
    j_star = 0
    for j in range(1, k):
        if counts[j] < suffix[j + 1]:
            j_star = j
            break
    assert j_star >= 1, "no bucket satisfies n_j < n_{>=j+1}"
    return SingleThreshold((j_star - 1) / k * a1)


def optimum_info_random_order(a_max: float, n: int, rng: Stream) -> Strategy:
    """Optimum information, random order: randomized bucket threshold."""
    if a_max < 0.0:
        raise ValueError("maximum must be >= 0")
    k = bucket_count_random_order(n)
    thetas = [(j - 1) / k * a_max for j in range(1, k)]
    j = rng.choice_index(_uniform_cum_weights(k - 1))
    return SingleThreshold(thetas[j])


def hinted_random_order(hint: float, n: int, rng: Stream) -> Strategy:
    """Same as the optimum-information player with the hint as reference.

    The score guarantee needs hint <= max value; running with a larger hint
    is legal but unguaranteed.
    """
    if hint < 0.0:
        raise ValueError("hint must be >= 0")
    return optimum_info_random_order(hint, n, rng)


class NoInfoRandomOrder(Strategy):
    """No information, random order: observe half, then act on the rest.

    The first m = floor(n/2) options are observed at threshold infinity. With
    the observed maximum as hint, a pre-drawn fair coin selects either the
    hinted randomized-threshold player or a single threshold at the hint
    itself, both restricted to the remaining options.
    """

    def __init__(self, n: int, rng: Stream):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.m = n // 2
        self.use_hinted = rng.coin() if n >= 2 else False
        if self.use_hinted:
            rest = n - self.m
            k = bucket_count_random_order(rest)
            self.k = k
            self.j = 1 + rng.choice_index(_uniform_cum_weights(k - 1))
        self.hat = 0.0
        self.theta = None

    def on_step_begin(self, index, ctx):
        if self.n == 1:
            return ACCEPT  # a single unknown option: take it whole
        if index <= self.m:
            return Test(math.inf)
        if self.theta is None:
            if self.use_hinted:
                self.theta = (self.j - 1) / self.k * self.hat
            else:
                self.theta = self.hat
        return Test(self.theta)

    def on_outcome(self, outcome):
        if outcome.passed:
            return ACCEPT
        if self.theta is None and outcome.observed > self.hat:  # observing
            self.hat = outcome.observed
        return REJECT


def no_info_random_order(n: int, rng: Stream) -> Strategy:
    return NoInfoRandomOrder(n, rng)


class ArbitraryOrderHinted(Strategy):
    """Arbitrary order with a hint at most the true maximum.

    Tests everything at theta = (j*-1)/k * hint for a uniformly random j*.
    Each pass is offered to the embedded committing bit player: on commit the
    option is accepted outright; otherwise one further test raises the spend
    to (j*+1)/k * hint and the pass/fail of that check is fed back as the
    player's next bit before rejecting.
    """

    def __init__(self, hint: float, n: int, rng: Stream):
        if hint < 0.0:
            raise ValueError("hint must be >= 0")
        self.rng = rng
        k = bucket_count_arbitrary_order(n)
        j_star = 1 + rng.choice_index(_uniform_cum_weights(k - 1))
        self.k = k
        self.j_star = j_star
        self.theta = (j_star - 1) / k * hint
        self.upper = (j_star + 1) / k * hint
        self.delta = 0
        self._second_stage = False

    def on_step_begin(self, index, ctx):
        self._second_stage = False
        return Test(self.theta)

    def on_outcome(self, outcome):
        if self._second_stage:
            self.delta += -1 if outcome.passed else 1
            return REJECT
        if not outcome.passed:
            return REJECT
        if self.rng.uniform() < commit_probability(self.delta):
            return ACCEPT
        self._second_stage = True
        return Test(self.upper - self.theta)


def arbitrary_order_hinted(hint: float, n: int, rng: Stream) -> Strategy:
    return ArbitraryOrderHinted(hint, n, rng)


def gap_algorithm_k(n: int) -> int:
    """Smallest k >= 2 with (k-1) * n**(-1/(k-1)) >= 1."""
    k = 2
    while (k - 1) * n ** (-1.0 / (k - 1)) < 1.0:
        k += 1
    return k


class GapWatch(Strategy):
    """Full information, random order: observe until a gap opens.

    The unseen multiset starts as the full value multiset and loses each
    observed value. Before every step, if some bucket j in [1, k-1] is empty
    among unseen values while something unseen exceeds its top edge, the
    strategy arms permanently at the bucket's lower edge and single-thresholds
    the remaining options, securing at least max/k.
    """

    def __init__(self, values: Sequence[float], n: int):
        self.a1 = max(values)
        self.k = gap_algorithm_k(n)
        self.counts = bucket_counts(values, self.a1, self.k) if self.a1 > 0 else [0] * (self.k + 1)
        self.armed_theta = None
        self._zero_max = self.a1 <= 0.0

    def _gap_bucket(self):
        above = 0
        hit = 0
        for j in range(self.k, 0, -1):
            if j <= self.k - 1 and self.counts[j] == 0 and above > 0:
                hit = j  # keep scanning: report the smallest qualifying j
            above += self.counts[j]
        return hit

    def on_step_begin(self, index, ctx):
        if self._zero_max:
            return ACCEPT
        if self.armed_theta is None:
            j = self._gap_bucket()
            if j > 0:
                self.armed_theta = (j - 1) / self.k * self.a1
        if self.armed_theta is not None:
            return Test(self.armed_theta)
        return Test(math.inf)

    def on_outcome(self, outcome):
        if self.armed_theta is not None:
            return ACCEPT if outcome.passed else REJECT
        v = outcome.observed
        if v is not None and 0.0 < v <= self.a1:
            self.counts[bucket_of(v, self.a1, self.k)] -= 1
        return REJECT


def gap_algorithm(values: Sequence[float], n: int) -> Strategy:
    return GapWatch(values, n)


class UniformPick(Strategy):
    """Accept one uniformly random option untested (the trivial baseline)."""

    def __init__(self, n: int, rng: Stream):
        self.pick = rng.randbelow(n) + 1

    def on_step_begin(self, index, ctx):
        return ACCEPT if index == self.pick else REJECT

    def on_outcome(self, outcome):  # pragma: no cover - never tests
        raise AssertionError("uniform pick never tests")


def baseline_uniform(n: int, rng: Stream) -> Strategy:
    return UniformPick(n, rng)
