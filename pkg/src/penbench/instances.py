"""Instance generators: hidden value sequences plus their arrival-order model.

An :class:`Instance` stores the values in generation order together with an
order model. ``uniform_random`` instances are reshuffled per game from the
caller's stream; ``generated`` instances must be played exactly in the stored
order (the order is the whole point of the construction); ``fixed`` plays the
values as given.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .distributions import Distribution
from .rng import Stream

ORDER_UNIFORM = "uniform"
ORDER_FIXED = "fixed"
ORDER_GENERATED = "generated"

_GENERATOR_ITERATION_CAP = 10**9


class InstanceError(ValueError):
    pass


@dataclass
class Instance:
    values: np.ndarray
    order: str = ORDER_FIXED
    provenance: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 1:
            raise InstanceError("instance needs a 1-D, nonempty value sequence")
        if not np.all(self.values >= 0.0) or not np.all(np.isfinite(self.values)):
            raise InstanceError("values must be finite and >= 0")
        if self.order not in (ORDER_UNIFORM, ORDER_FIXED, ORDER_GENERATED):
            raise InstanceError(f"unknown order model {self.order!r}")

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def benchmark(self) -> float:
        """The realized maximum (prophet optimum / top secretary value)."""
        return float(self.values.max())

    def realized_values(self, rng: Stream) -> np.ndarray:
        """Arrival order for one game; uniform instances consume the stream."""
        if self.order == ORDER_UNIFORM:
            out = self.values.copy()
            rng.shuffle(out)
            return out
        return self.values

    def to_json(self) -> str:
        return json.dumps(
            {
                "values": self.values.tolist(),
                "order": self.order,
                "benchmark": self.benchmark,
                "provenance": self.provenance,
            }
        )

    @staticmethod
    def from_json(text: str) -> "Instance":
        obj = json.loads(text)
        return Instance(
            values=np.asarray(obj["values"], dtype=np.float64),
            order=obj.get("order", ORDER_FIXED),
            provenance=obj.get("provenance", {}),
        )


def iid_from(dist: Distribution, n: int, rng: Stream, order: str = ORDER_FIXED) -> Instance:
    """n independent draws from one law, in draw order."""
    if n < 1:
        raise InstanceError("n must be >= 1")
    values = np.empty(n, dtype=np.float64)
    for i in range(n):
        values[i] = dist.sample(rng)
    return Instance(values, order=order, provenance={"generator": "iid", "dist": repr(dist), "n": n})


def independent_from(dists: Sequence[Distribution], rng: Stream) -> Instance:
    """One draw per law, index order (the non-identical prophet instance)."""
    values = np.empty(len(dists), dtype=np.float64)
    for i, d in enumerate(dists):
        values[i] = d.sample(rng)
    return Instance(values, order=ORDER_FIXED, provenance={"generator": "independent", "n": len(dists)})


def power_counts_values(k: int, base: int = 2) -> np.ndarray:
    """Multiset where value j appears base**(k-j) times, j = 0..k.

    Size is (base**(k+1) - 1) / (base - 1).
    """
    if k < 1:
        raise InstanceError("k must be >= 1")
    if base < 2:
        raise InstanceError("base must be >= 2")
    n = (base ** (k + 1) - 1) // (base - 1)
    if n > 200_000_000:
        raise InstanceError(f"instance size {n} too large")
    out = np.empty(n, dtype=np.float64)
    pos = 0
    for j in range(k + 1):
        cnt = base ** (k - j)
        out[pos : pos + cnt] = float(j)
        pos += cnt
    return out


def power_counts(k: int, base: int = 2, order: str = ORDER_UNIFORM) -> Instance:
    values = power_counts_values(k, base)
    return Instance(
        values,
        order=order,
        provenance={"generator": "power_counts", "k": k, "base": base},
    )


def nonuniform_geometric_order(k: int, rng: Stream) -> Instance:
    """Hard arrival order over the base-4 multiset.

    Repeatedly draw a level with probability 2**-(j+1); keep it when j <= k
    and level j has not yet filled its quota of 4**(k-j) appearances. The
    emitted order is part of the instance and is never reshuffled.
    """
    if k < 1:
        raise InstanceError("k must be >= 1")
    quotas = [4 ** (k - j) for j in range(k + 1)]
    n = sum(quotas)
    counts = [0] * (k + 1)
    out = np.empty(n, dtype=np.float64)
    filled = 0
    iterations = 0
    while filled < n:
        iterations += 1
        if iterations > _GENERATOR_ITERATION_CAP:
            raise ArithmeticError("generator iteration cap exceeded")
        j = rng.geometric_level()
        if j <= k and counts[j] < quotas[j]:
            counts[j] += 1
            out[filled] = float(j)
            filled += 1
    return Instance(
        out,
        order=ORDER_GENERATED,
        provenance={"generator": "nonuniform_geometric_order", "k": k},
    )


def truncated_exponential_secretary(n: int, rng: Stream) -> Instance:
    """n i.i.d. draws of min(Exp(1), ln(n)/2), shuffled uniformly per game."""
    if n < 2:
        raise InstanceError("n must be >= 2")
    cap = math.log(n) / 2.0
    values = np.empty(n, dtype=np.float64)
    for i in range(n):
        values[i] = min(rng.exponential(1.0), cap)
    return Instance(
        values,
        order=ORDER_UNIFORM,
        provenance={"generator": "truncated_exponential_secretary", "n": n, "cap": cap},
    )
