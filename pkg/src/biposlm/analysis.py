"""Weakness analysis: impact of subsets of the test text and probability
decomposition of per-word log-probabilities into model components."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .models import SEEN

X_RANGE = tuple(range(1, 21))
COMPONENTS = ("unknown", "fact", "word", "pos")


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ImpactRow:
    key: object
    n: int
    ltp: float
    avg: float | None
    f: float

    def as_dict(self) -> dict:
        return {"key": self.key, "n": self.n, "LTP": self.ltp, "avg": self.avg, "f": self.f}


@dataclass(frozen=True)
class ImpactReport:
    partition: str
    rows: tuple
    total_ltp: float

    def f(self, key) -> float:
        for row in self.rows:
            if row.key == key:
                return row.f
        raise KeyError(key)

    def keys(self) -> list:
        return [row.key for row in self.rows]


KEYS: dict[str, Callable] = {
    "prev_tag": lambda r: r.prev_tag,
    "assigned_tag": lambda r: r.assigned_tag,
    "gold_tag": lambda r: r.gold_tag,
    "word_class": lambda r: r.word_class,
    "word": lambda r: r.surface,
}


def _sort_rows(rows):
    return tuple(sorted(rows, key=lambda row: (-row.f, str(row.key))))


def impact(records: Sequence, key="prev_tag", universe: Iterable | None = None) -> ImpactReport:
    """LTP per group and each group's fraction of the whole.

    ``key`` is a built-in key name or a function of a record.  Keys listed
    in ``universe`` but absent from the records get a zero row.
    """
    if not records:
        raise AnalysisError("no records to analyze")
    name = key if isinstance(key, str) else getattr(key, "__name__", "custom")
    fn = KEYS[key] if isinstance(key, str) else key
    groups: dict = {}
    for r in records:
        groups.setdefault(fn(r), []).append(r.log2p)
    for k in universe or ():
        groups.setdefault(k, [])
    total = math.fsum(r.log2p for r in records)
    if total == 0:
        raise AnalysisError("total LTP is zero; fractions are undefined")
    rows = []
    for k, vals in groups.items():
        ltp = math.fsum(vals)
        rows.append(ImpactRow(k, len(vals), ltp, ltp / len(vals) if vals else None, ltp / total))
    return ImpactReport(name, _sort_rows(rows), total)


def following_tag(records: Sequence, prev_tag) -> ImpactReport:
    """Impact of each assigned tag among the words that follow ``prev_tag``."""
    subset = [r for r in records if r.prev_tag == prev_tag]
    if not subset:
        raise AnalysisError(f"no words follow tag {prev_tag!r}")
    rep = impact(subset, "assigned_tag")
    return ImpactReport(f"following {prev_tag}", rep.rows, rep.total_ltp)


# ---------------------------------------------------------------------------
# probability decomposition


def decompose(terms: Sequence[Sequence[float]]) -> tuple[list, list]:
    """Split S = sum_i prod_j t_ij into factors F_j = S**p_j with prod F_j = S.

    Returns (shares, factors).  Each term's share for factor j is the
    fraction of its log-probability coming from that factor; the shares
    are averaged with weights t_i / S.
    """
    if not terms:
        raise AnalysisError("at least one term is needed")
    width = len(terms[0])
    products = []
    for t in terms:
        if len(t) != width:
            raise AnalysisError("all terms need the same number of factors")
        if any(not 0 < v <= 1 for v in t):
            raise AnalysisError(f"factors must lie in (0, 1], got {tuple(t)}")
        products.append(math.prod(t))
    S = math.fsum(products)
    if not 0 < S < 1:
        raise AnalysisError(f"sum S={S} must lie strictly between 0 and 1")
    shares = [[] for _ in range(width)]
    for t, prod in zip(terms, products):
        log_prod = math.log2(prod)
        for j, v in enumerate(t):
            if log_prod == 0.0:
                share = 1.0 / width
            else:
                share = math.log2(v) / log_prod
            shares[j].append(prod / S * share)
    p = [math.fsum(col) for col in shares]
    return p, [S ** pj for pj in p]


def decompose_two(terms: Sequence[tuple[float, float]]):
    (p_a, p_b), (A, B) = decompose(terms)
    return p_a, p_b, A, B


def decompose_three(terms: Sequence[tuple[float, float, float]]):
    (p_a, p_b, p_c), (A, B, C) = decompose(terms)
    return p_a, p_b, p_c, A, B, C


def record_components(rec) -> dict:
    """log2p of one record split over the unknown/fact/word/pos columns."""
    out = dict.fromkeys(COMPONENTS, 0.0)
    if rec.log2p == 0:
        return out
    if rec.word_class != SEEN or not rec.terms:
        out["unknown"] = rec.log2p
        return out
    (p_k, p_a, p_b), _ = decompose([(k, a, b) for _, k, a, b in rec.terms])
    out["fact"] = p_k * rec.log2p
    out["pos"] = p_a * rec.log2p
    out["word"] = p_b * rec.log2p
    return out


@dataclass(frozen=True)
class ComponentShares:
    ltp: dict
    fractions: dict
    n: int


def component_report(records: Sequence) -> ComponentShares:
    """Fraction of LTP caused by unknown words, the seen-word scale (fact),
    the tag factor (pos) and the word factor (word)."""
    cols = {c: [] for c in COMPONENTS}
    used = 0
    for rec in records:
        if rec.log2p == 0:
            continue
        used += 1
        for c, v in record_components(rec).items():
            cols[c].append(v)
    ltp = {c: math.fsum(v) for c, v in cols.items()}
    total = math.fsum(v for vals in cols.values() for v in vals)
    if total == 0:
        raise AnalysisError("no records with nonzero log-probability")
    return ComponentShares(ltp, {c: ltp[c] / total for c in COMPONENTS}, used)


def context_detail(records: Sequence, tags: Sequence) -> list[dict]:
    """Per previous tag: count, LTP, average and the tag/word/rest split."""
    known = {r.prev_tag for r in records}
    rows = []
    for g in tags:
        if g not in known:
            raise AnalysisError(f"tag {g!r} never precedes a test word")
        group = [r for r in records if r.prev_tag == g]
        ltp_g = math.fsum(r.log2p for r in group)
        parts = {c: [] for c in COMPONENTS}
        for r in group:
            for c, v in record_components(r).items():
                parts[c].append(v)
        if ltp_g == 0:
            f_tag = f_word = 0.0
        else:
            f_tag = math.fsum(parts["pos"]) / ltp_g
            f_word = math.fsum(parts["word"]) / ltp_g
        rows.append({"tag": g, "n": len(group), "LTP": ltp_g, "avg": ltp_g / len(group),
                     "f_tag": f_tag, "f_word": f_word, "f_rest": 1.0 - f_tag - f_word})
    return rows


def word_given_tag(records: Sequence) -> list[dict]:
    """Word-factor LTP per assigned tag for seen words.

    ``f`` is the share of the total word-factor LTP, ``f_total`` the share
    of the whole test LTP.
    """
    total = math.fsum(r.log2p for r in records)
    if total == 0:
        raise AnalysisError("total LTP is zero")
    per_tag: dict = {}
    for r in records:
        if r.word_class != SEEN or r.log2p == 0:
            continue
        per_tag.setdefault(r.assigned_tag, []).append(record_components(r)["word"])
    ltp_word = math.fsum(v for vals in per_tag.values() for v in vals)
    rows = []
    for g, vals in per_tag.items():
        ltp_g = math.fsum(vals)
        rows.append({"tag": g, "n": len(vals), "LTP": ltp_g, "avg": ltp_g / len(vals),
                     "f": ltp_g / ltp_word if ltp_word else 0.0, "f_total": ltp_g / total})
    rows.sort(key=lambda row: (-row["f"], str(row["tag"])))
    return rows


def unknown_impact(results: Mapping) -> list[dict]:
    """Share of LTP due to unknown words, one row per named result."""
    rows = []
    for name, res in results.items():
        rows.append({"model": name, "LTP": res.LTP, "LTP_unknown": res.LTP_unknown,
                     "fraction": res.LTP_unknown / res.LTP if res.LTP else 0.0})
    return rows


# ---------------------------------------------------------------------------
# curves


def zipf_curve(report: ImpactReport) -> list[tuple[float, float]]:
    """Cumulative fraction of LTP against the fraction of keys, largest first."""
    rows = sorted(report.rows, key=lambda row: (-row.f, str(row.key)))
    m = len(rows)
    total = math.fsum(row.ltp for row in rows)
    points = []
    acc = []
    for i, row in enumerate(rows, 1):
        acc.append(row.ltp)
        points.append((i / m, math.fsum(acc) / total))
    return points


def rare_word_curve_from_counts(counts: Mapping[str, int], xs: Sequence[int] = X_RANGE) -> list[tuple[int, float]]:
    if not counts:
        raise AnalysisError("no words to count")
    values = list(counts.values())
    return [(x, sum(1 for c in values if c < x) / len(values)) for x in xs]


def rare_word_curve(train, tag: str, xs: Sequence[int] = X_RANGE) -> list[tuple[int, float]]:
    """Fraction of the distinct words with ``tag`` occurring fewer than x times."""
    counts = Counter(t.surface for t in train.tokens if t.tag == tag)
    if not counts:
        raise AnalysisError(f"no training words carry tag {tag!r}")
    return rare_word_curve_from_counts(counts, xs)
