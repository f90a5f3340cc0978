"""Counting, estimation, smoothing and information measures.

All logarithms are base 2.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

NORM_TOL = 1e-9


class DistributionError(ValueError):
    pass


@dataclass
class FreqTable:
    """Occurrence counts O(E=e | C=c) per context."""

    counts: dict = field(default_factory=lambda: defaultdict(Counter))
    n: int = 0

    def add(self, context: Hashable, event: Hashable, k: int = 1) -> None:
        self.counts[context][event] += k
        self.n += k

    def total(self, context) -> int:
        return sum(self.counts[context].values()) if context in self.counts else 0

    def get(self, context, event) -> int:
        row = self.counts.get(context)
        return row.get(event, 0) if row is not None else 0

    def contexts(self):
        return list(self.counts)

    def events(self) -> list:
        """Every event observed in any context, in first-seen order."""
        seen: dict = {}
        for row in self.counts.values():
            for e in row:
                seen.setdefault(e, None)
        return list(seen)

    def __add__(self, other: "FreqTable") -> "FreqTable":
        out = FreqTable()
        for table in (self, other):
            for c, row in table.counts.items():
                out.counts[c].update(row)
        out.n = self.n + other.n
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, FreqTable):
            return NotImplemented
        mine = {c: dict(r) for c, r in self.counts.items() if r}
        theirs = {c: dict(r) for c, r in other.counts.items() if r}
        return self.n == other.n and mine == theirs


def count(events: Iterable[tuple[Hashable, Hashable]]) -> FreqTable:
    table = FreqTable()
    for context, event in events:
        table.add(context, event)
    return table


@dataclass
class CondDistribution:
    """Dense conditional distributions p(E | C=c) over a fixed event list."""

    events: tuple
    rows: dict

    def __post_init__(self):
        self.events = tuple(self.events)
        self._index = {e: i for i, e in enumerate(self.events)}

    def p(self, event, context) -> float:
        i = self._index.get(event)
        if i is None:
            return 0.0
        return float(self.rows[context][i])

    def row(self, context) -> np.ndarray:
        return self.rows[context]

    def as_dict(self, context) -> dict:
        return dict(zip(self.events, self.rows[context].tolist()))

    def check(self, tol: float = NORM_TOL) -> None:
        for c, vec in self.rows.items():
            if np.any(vec < 0) or np.any(vec > 1):
                raise DistributionError(f"context {c!r}: probability outside [0, 1]")
            if abs(math.fsum(vec.tolist()) - 1.0) > tol:
                raise DistributionError(f"context {c!r}: probabilities do not sum to 1")


def mle(freq: FreqTable, events: Sequence | None = None) -> CondDistribution:
    """Relative frequencies per context; unobserved events get 0."""
    events = tuple(events) if events is not None else tuple(freq.events())
    index = {e: i for i, e in enumerate(events)}
    rows = {}
    for c, row in freq.counts.items():
        total = sum(row.values())
        if total <= 0:
            raise DistributionError(f"context {c!r} has no observations")
        vec = np.zeros(len(events))
        for e, k in row.items():
            if e not in index:
                raise DistributionError(f"event {e!r} not in the declared event set")
            vec[index[e]] = k
        rows[c] = vec / total
    return CondDistribution(events, rows)


def smooth_additive(dist: CondDistribution, v1: float) -> CondDistribution:
    """p'(e|c) = v2 * p(e|c) + v1 with v2 = 1 - |E| * v1."""
    size = len(dist.events)
    if v1 < 0 or v1 * size >= 1:
        raise DistributionError(f"v1={v1} must lie in [0, 1/{size})")
    v2 = 1.0 - size * v1
    return CondDistribution(dist.events, {c: v2 * vec + v1 for c, vec in dist.rows.items()})


def _aligned(d1, d2):
    if isinstance(d1, Mapping) or isinstance(d2, Mapping):
        if not (isinstance(d1, Mapping) and isinstance(d2, Mapping)):
            raise DistributionError("cannot mix mapping and vector distributions")
        if set(d1) != set(d2):
            raise DistributionError("distributions are over different event sets")
        keys = list(d1)
        return keys, np.array([d1[k] for k in keys], float), np.array([d2[k] for k in keys], float)
    a, b = np.asarray(d1, float), np.asarray(d2, float)
    if a.shape != b.shape:
        raise DistributionError(f"event sets differ in size: {a.shape} vs {b.shape}")
    return None, a, b


def interpolate(d1, d2, lam: float):
    """lam * d1 + (1 - lam) * d2, for vectors or event->probability mappings."""
    if not 0.0 <= lam <= 1.0:
        raise DistributionError(f"lambda={lam} outside [0, 1]")
    keys, a, b = _aligned(d1, d2)
    if lam == 1.0:
        out = a.copy()
    elif lam == 0.0:
        out = b.copy()
    else:
        out = lam * a + (1.0 - lam) * b
    if keys is None:
        return out
    return dict(zip(keys, out.tolist()))


def entropy(p) -> float:
    """-sum p log2 p, with 0 log 0 = 0."""
    p = np.asarray(list(p.values()) if isinstance(p, Mapping) else p, float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def relative_entropy(posterior, prior) -> float:
    """D(posterior || prior) in bits."""
    _, post, pri = _aligned(posterior, prior)
    if np.any((post > 0) & (pri == 0)):
        raise DistributionError("posterior puts mass where the prior has none")
    mask = post > 0
    d = float(np.sum(post[mask] * np.log2(post[mask] / pri[mask])))
    # rounding can push identical vectors a hair below zero
    return max(d, 0.0)
