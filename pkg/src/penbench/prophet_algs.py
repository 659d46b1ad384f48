"""Strategies for the prophet setting: known distributions or one sample each.

Every strategy here reduces to testing options at thresholds derived from
quantiles. Randomized threshold choices always consume exactly one uniform
through a cumulative-weight table (``Stream.choice_index``) so that compiled
kernels can replay the identical decision stream.
"""

from __future__ import annotations

import math
from typing import List, Sequence

from .distributions import Distribution, max_law_upper_quantile
from .engine import ACCEPT, REJECT, Strategy, Test
from .rng import Stream


class SingleThreshold(Strategy):
    """Test every option once at the same threshold; accept the first pass."""

    def __init__(self, theta: float):
        if not (theta >= 0.0):
            raise ValueError(f"threshold must be >= 0, got {theta!r}")
        self.theta = float(theta)

    def on_step_begin(self, index, ctx):
        return Test(self.theta)

    def on_outcome(self, outcome):
        return ACCEPT if outcome.passed else REJECT


class RandomizedThreshold(SingleThreshold):
    """Single-threshold at a theta drawn once from a finite mixture."""

    def __init__(self, thetas: Sequence[float], cum_weights: Sequence[float], rng: Stream):
        idx = rng.choice_index(cum_weights)
        super().__init__(thetas[idx])


def _uniform_cum_weights(k: int) -> List[float]:
    return [(i + 1) / k for i in range(k)]


def quantile_grid(dist: Distribution, n: int):
    """Thresholds tau_alpha for alpha in {1, 1/2, ..., 2**-(k-1)}, k = ceil(log2 n)."""
    k = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    alphas = [2.0**-j for j in range(k)]
    thetas = [dist.upper_quantile(a) for a in alphas]
    return alphas, thetas


def iid_first_algorithm(dist: Distribution, n: int) -> SingleThreshold:
    """Single threshold at the (1 - 1/n) upper quantile."""
    return SingleThreshold(dist.upper_quantile(1.0 / n))


def iid_second_algorithm(dist: Distribution, n: int, rng: Stream) -> RandomizedThreshold:
    """Single threshold at tau_alpha for alpha uniform on the dyadic grid."""
    _, thetas = quantile_grid(dist, n)
    return RandomizedThreshold(thetas, _uniform_cum_weights(len(thetas)), rng)


def iid_mixture(dist: Distribution, n: int, rng: Stream) -> SingleThreshold:
    """Fair coin between the fixed-quantile and grid-quantile algorithms."""
    if rng.coin():
        return iid_first_algorithm(dist, n)
    return iid_second_algorithm(dist, n, rng)


def refined_weights(n: int):
    """Threshold levels and mixture weights of the tuned i.i.d. algorithm.

    With x = sqrt(ln n)/n and k = ceil(ln(1/x)), the levels are
    alpha_j = x**(j/k) for j = 0..k, and level j is used with probability
    proportional to 1/C_j where C_j = [1-(1-alpha_k)**n] * alpha_{j+1}/alpha_j
    for j < k and C_k = [1-(1-alpha_k)**n] / (n*alpha_k).
    """
    if n < 3:
        raise ValueError("refined mixture needs n >= 3")
    x = math.sqrt(math.log(n)) / n
    k = max(1, math.ceil(math.log(1.0 / x)))
    alphas = [x ** (j / k) for j in range(k + 1)]
    accept_all = 1.0 - (1.0 - alphas[k]) ** n
    c = [accept_all * alphas[j + 1] / alphas[j] for j in range(k)]
    c.append(accept_all / (n * alphas[k]))
    inv = [1.0 / cj for cj in c]
    gamma = sum(inv)
    weights = [w / gamma for w in inv]
    return alphas, weights, gamma


def iid_refined(dist: Distribution, n: int, rng: Stream) -> RandomizedThreshold:
    alphas, weights, _ = refined_weights(n)
    thetas = [dist.upper_quantile(a) for a in alphas]
    cum = []
    acc = 0.0
    for w in weights:
        acc += w
        cum.append(acc)
    cum[-1] = 1.0
    return RandomizedThreshold(thetas, cum, rng)


class TailGroupProfile:
    """Tail bucketing of non-identical laws at the median of their maximum.

    alpha_i is each option's chance of exceeding tau_half; group j collects
    options with alpha_i in (2**-(j+1), 2**-j]. The selected group maximizes
    |G_j| / 2**j, which is guaranteed to be at least 1/(4(k+2)).
    """

    def __init__(self, dists: Sequence[Distribution]):
        n = len(dists)
        if n < 1:
            raise ValueError("need at least one distribution")
        self.tau_half = max_law_upper_quantile(dists, 0.5)
        self.alphas = [d.survival(self.tau_half) for d in dists]
        total = sum(self.alphas)
        # 1e-6 slack absorbs the quantile bisection tolerance
        assert total >= 0.5 - 1e-6, f"sum of tail probabilities {total} < 1/2"
        self.k = max(1, math.ceil(math.log2(n))) if n > 1 else 1
        self.groups: List[List[int]] = [[] for _ in range(self.k + 3)]
        for i, a in enumerate(self.alphas):
            placed = False
            for j in range(self.k + 2):
                if 2.0 ** -(j + 1) < a <= 2.0**-j:
                    self.groups[j].append(i)
                    placed = True
                    break
            if not placed:
                self.groups[self.k + 2].append(i)
        best_j, best_mass = 0, -1.0
        for j in range(self.k + 2):  # the catch-all tail group is excluded
            mass = len(self.groups[j]) / 2.0**j
            if mass > best_mass:
                best_j, best_mass = j, mass
        self.j_star = best_j
        assert best_mass >= 1.0 / (4.0 * (self.k + 2))
        z = 0.0
        probs = []
        g = len(self.groups[self.j_star])
        for j in range(self.j_star + 1):
            w = 1.0 / min(2.0**-j * g, 1.0)
            probs.append(w)
            z += w
        self.mixture_weights = [p / z for p in probs]
        self.normalizer = z


def chronological_blocks(members: Sequence[int], block_size: int) -> List[List[int]]:
    """Split sorted member indexes into consecutive blocks of block_size
    (the last block may be smaller). Blocks satisfy max(B_k) < min(B_{k+1}).
    """
    ordered = sorted(members)
    return [list(ordered[i : i + block_size]) for i in range(0, len(ordered), block_size)]


class BlockQuantileStrategy(Strategy):
    """Test only one block of the selected group, each option at its own
    tail quantile; accept the first pass, ignore everything else."""

    def __init__(self, dists: Sequence[Distribution], profile: TailGroupProfile, rng: Stream):
        j = rng.choice_index(_cum(profile.mixture_weights))
        alpha = 2.0**-j
        block_size = 2**j
        members = profile.groups[profile.j_star]
        blocks = chronological_blocks(members, block_size)
        pick = rng.randbelow(len(blocks))
        self.alpha = alpha
        self.block = set(blocks[pick])
        self.dists = dists

    def on_step_begin(self, index, ctx):
        i = index - 1
        if i not in self.block:
            return REJECT
        return Test(self.dists[i].upper_quantile(self.alpha))

    def on_outcome(self, outcome):
        return ACCEPT if outcome.passed else REJECT


def _cum(weights: Sequence[float]) -> List[float]:
    out = []
    acc = 0.0
    for w in weights:
        acc += w
        out.append(acc)
    out[-1] = 1.0
    return out


def general_prophet(dists: Sequence[Distribution], rng: Stream) -> Strategy:
    """Fair coin between the block/quantile player and a single threshold at
    the median of the maximum law."""
    profile = TailGroupProfile(dists)
    if rng.coin():
        return BlockQuantileStrategy(dists, profile, rng)
    return SingleThreshold(profile.tau_half)


def single_sample_prophet(sample_values: Sequence[float], n: int, rng: Stream) -> Strategy:
    """One observed sample per option: use the sample maximum as a hint.

    Fair coin between the arbitrary-order hinted player (hint = sample max)
    and a single threshold at the sample max.
    """
    if len(sample_values) == 0:
        raise ValueError("need one sample per option")
    hat = max(float(v) for v in sample_values)
    if rng.coin():
        from .secretary_algs import arbitrary_order_hinted

        return arbitrary_order_hinted(hat, n, rng)
    return SingleThreshold(hat)
