"""Nonnegative laws with sampling, survival functions and upper quantiles.

The upper quantile at level ``a`` is the smallest ``t >= 0`` with
``P(X > t) <= a``; for an atomless law this is the point where the survival
function equals ``a``, and for every law ``upper_quantile(1) == 0``. Discrete
laws can be smoothed with :class:`Continuous` which adds an independent
uniform jitter on ``[0, eps)`` so that quantile-based players apply.
"""

from __future__ import annotations

import math
import re
from typing import List, Sequence

from .rng import Stream


class DomainError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


_QUANTILE_TOL = 1e-9
_MAX_BISECT = 200


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"quantile level must be in (0, 1], got {alpha!r}")


class Distribution:
    """Interface: sample, survival, upper_quantile, mean.

    ``survival(x)`` is P(X > x). ``mean()`` may raise NotImplementedError for
    laws that do not declare one. Instances are immutable and safe to share.
    """

    continuous = False

    def sample(self, rng: Stream) -> float:
        raise NotImplementedError

    def survival(self, x: float) -> float:
        raise NotImplementedError

    def upper_quantile(self, alpha: float) -> float:
        """Smallest t >= 0 with P(X > t) <= alpha."""
        _check_alpha(alpha)
        if alpha >= 1.0:
            return 0.0
        return self._upper_quantile(alpha)

    def _upper_quantile(self, alpha: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError


class Exponential(Distribution):
    continuous = True

    def __init__(self, rate: float):
        if not (rate > 0.0):
            raise DomainError(f"rate must be > 0, got {rate!r}")
        self.rate = float(rate)

    def sample(self, rng):
        return rng.exponential(self.rate)

    def survival(self, x):
        if x < 0.0:
            return 1.0
        return math.exp(-self.rate * x)

    def _upper_quantile(self, alpha):
        return math.log(1.0 / alpha) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def __repr__(self):
        return f"exp({self.rate:g})"


class TruncatedExponential(Distribution):
    """min(X, cap) for X ~ Exp(1): an atom of mass e**-cap sits at cap."""

    continuous = False  # the atom at cap

    def __init__(self, cap: float):
        if not (cap > 0.0):
            raise DomainError(f"cap must be > 0, got {cap!r}")
        self.cap = float(cap)

    def sample(self, rng):
        return min(rng.exponential(1.0), self.cap)

    def survival(self, x):
        if x < 0.0:
            return 1.0
        if x >= self.cap:
            return 0.0
        return math.exp(-x)

    def _upper_quantile(self, alpha):
        return min(math.log(1.0 / alpha), self.cap)

    def mean(self):
        return 1.0 - math.exp(-self.cap)

    def __repr__(self):
        return f"truncexp({self.cap:g})"


class UniformInterval(Distribution):
    continuous = True

    def __init__(self, a: float, b: float):
        if not (0.0 <= a < b):
            raise DomainError(f"need 0 <= a < b, got ({a!r}, {b!r})")
        self.a = float(a)
        self.b = float(b)

    def sample(self, rng):
        return self.a + rng.uniform() * (self.b - self.a)

    def survival(self, x):
        if x < self.a:
            return 1.0
        if x >= self.b:
            return 0.0
        return (self.b - x) / (self.b - self.a)

    def _upper_quantile(self, alpha):
        return self.b - alpha * (self.b - self.a)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def __repr__(self):
        return f"uniform({self.a:g},{self.b:g})"


class DiscreteWeighted(Distribution):
    """Finite law: value v_j with probability w_j / sum(w)."""

    def __init__(self, values: Sequence[float], weights: Sequence[float]):
        if len(values) == 0 or len(values) != len(weights):
            raise DomainError("values and weights must be nonempty, same length")
        if any(v < 0 for v in values):
            raise DomainError("values must be >= 0")
        if any(w <= 0 for w in weights):
            raise DomainError("weights must be > 0")
        pairs = sorted(zip(map(float, values), map(float, weights)))
        merged: List[List[float]] = []
        for v, w in pairs:
            if merged and merged[-1][0] == v:
                merged[-1][1] += w
            else:
                merged.append([v, w])
        total = sum(w for _, w in merged)
        self.values = [v for v, _ in merged]
        self.probs = [w / total for _, w in merged]
        # cumulative P(X <= v_j), used for inverse-CDF sampling
        self._cdf = []
        acc = 0.0
        for p in self.probs:
            acc += p
            self._cdf.append(acc)
        self._cdf[-1] = 1.0

    def atoms(self):
        return list(zip(self.values, self.probs))

    def sample(self, rng):
        u = rng.uniform()
        for v, c in zip(self.values, self._cdf):
            if u < c:
                return v
        return self.values[-1]

    def survival(self, x):
        s = 0.0
        for v, p in zip(self.values, self.probs):
            if v > x:
                s += p
        return s

    def _upper_quantile(self, alpha):
        if self.survival(0.0) <= alpha:
            return 0.0
        for v, c in zip(self.values, self._cdf):
            if 1.0 - c <= alpha:  # survival(v) = 1 - cdf(v)
                return v
        return self.values[-1]

    def mean(self):
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def __repr__(self):
        inner = ",".join(f"{v:g}:{p:g}" for v, p in zip(self.values, self.probs))
        return f"discrete({inner})"


class Degenerate(DiscreteWeighted):
    def __init__(self, v: float):
        super().__init__([v], [1.0])

    def __repr__(self):
        return f"degenerate({self.values[0]:g})"


def empirical_from_samples(samples: Sequence[float]) -> DiscreteWeighted:
    """Uniform law over a nonempty multiset of observed values."""
    if len(samples) == 0:
        raise DomainError("empirical law needs at least one sample")
    return DiscreteWeighted(list(samples), [1.0] * len(samples))


class Continuous(Distribution):
    """Smoothing wrapper: base value plus independent uniform on [0, eps).

    Turns a finite law into an atomless one so upper quantiles exist in the
    strict sense. ``eps`` defaults to 1e-9 times the largest atom (or 1e-9
    when the base is all-zero).
    """

    continuous = True

    def __init__(self, base: DiscreteWeighted, eps: float | None = None):
        if not isinstance(base, DiscreteWeighted):
            raise DomainError("continuity wrapper applies to finite laws")
        if eps is None:
            scale = max(base.values)
            eps = 1e-9 * scale if scale > 0 else 1e-9
        if not (eps > 0.0):
            raise DomainError(f"eps must be > 0, got {eps!r}")
        self.base = base
        self.eps = float(eps)

    def sample(self, rng):
        return self.base.sample(rng) + self.eps * rng.uniform()

    def survival(self, x):
        # P(v + eps*U > x) = clamp((v + eps - x)/eps, 0, 1) per atom
        s = 0.0
        for v, p in self.base.atoms():
            frac = (v + self.eps - x) / self.eps
            if frac >= 1.0:
                s += p
            elif frac > 0.0:
                s += p * frac
        return s

    def _upper_quantile(self, alpha):
        # survival is piecewise linear and nonincreasing; walk the segments
        knots = sorted({v for v, _ in self.base.atoms()} | {v + self.eps for v, _ in self.base.atoms()})
        prev = 0.0
        if self.survival(0.0) <= alpha:
            return 0.0
        for x in knots:
            if x <= 0.0:
                continue
            s = self.survival(x)
            if s <= alpha:
                # linear between prev and x
                s0 = self.survival(prev)
                if s0 == s:
                    return prev
                t = prev + (s0 - alpha) * (x - prev) / (s0 - s)
                return min(max(t, prev), x)
            prev = x
        return knots[-1]

    def mean(self):
        return self.base.mean() + 0.5 * self.eps

    def __repr__(self):
        return f"continuous({self.base!r},eps={self.eps:g})"


def max_law_survival(dists: Sequence[Distribution], x: float) -> float:
    """P(max_i X_i > x) for independent X_i."""
    prod = 1.0
    for d in dists:
        prod *= 1.0 - d.survival(x)
    return 1.0 - prod


def max_law_upper_quantile(dists: Sequence[Distribution], alpha: float) -> float:
    """Smallest t with P(max <= t) >= 1 - alpha, by bracketed bisection.

    The bracket grows geometrically from [0, 1]; bisection runs to absolute
    tolerance 1e-9 on t, with a hard cap of 200 halvings.
    """
    _check_alpha(alpha)
    if len(dists) == 0:
        raise DomainError("need at least one distribution")
    target = 1.0 - alpha

    def cdf(t):
        prod = 1.0
        for d in dists:
            prod *= 1.0 - d.survival(t)
        return prod

    if cdf(0.0) >= target:
        return 0.0
    hi = 1.0
    grow = 0
    while cdf(hi) < target:
        hi *= 2.0
        grow += 1
        if grow > 1100:
            raise NumericError("max-law quantile bracket failed to grow")
    lo = 0.0
    steps = 0
    while hi - lo > _QUANTILE_TOL:
        steps += 1
        if steps > _MAX_BISECT:
            raise NumericError("max-law quantile bisection did not converge")
        mid = 0.5 * (lo + hi)
        if cdf(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


_SPEC_RE = re.compile(r"^\s*([a-z]+)\s*\(\s*(.*?)\s*\)\s*$")


def parse_distribution(spec: str) -> Distribution:
    """Parse the mini-format: exp(rate), truncexp(cap), uniform(a,b),
    discrete(v1:w1,v2:w2,...), degenerate(v), continuous(<inner>[,eps=E]).
    """
    m = _SPEC_RE.match(spec)
    if not m:
        raise DomainError(f"bad distribution spec: {spec!r}")
    name, args = m.group(1), m.group(2)
    try:
        if name == "exp":
            return Exponential(float(args))
        if name == "truncexp":
            return TruncatedExponential(float(args))
        if name == "uniform":
            a, b = args.split(",")
            return UniformInterval(float(a), float(b))
        if name == "degenerate":
            return Degenerate(float(args))
        if name == "discrete":
            values, weights = [], []
            for part in args.split(","):
                v, w = part.split(":")
                values.append(float(v))
                weights.append(float(w))
            return DiscreteWeighted(values, weights)
        if name == "continuous":
            eps = None
            inner = args
            em = re.search(r",\s*eps=([0-9.eE+-]+)\s*$", args)
            if em:
                eps = float(em.group(1))
                inner = args[: em.start()]
            return Continuous(parse_distribution(inner), eps)  # type: ignore[arg-type]
    except DomainError:
        raise
    except Exception as exc:
        raise DomainError(f"bad distribution spec: {spec!r} ({exc})") from exc
    raise DomainError(f"unknown distribution {name!r} in {spec!r}")
