"""Scoring a model over a test text: TP, LTP, LP, PP, the split by word
class, adjusted measures, training-size sweeps and the lambda grid."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .corpus import TaggedCorpus, build_vocabulary, split_corpus
from .models import (SEEN, UNKNOWN, UNSEEN, BiposModel, ContextVariable, GeneralizedModel,
                     train_bipos)

LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))
TP_MAX_N = 64
RECORD_COLUMNS = ("index", "surface", "word_class", "prev_tag", "assigned_tag", "gold_tag",
                  "prob", "log2p", "x", "terms")
SWEEP_COLUMNS = ("size", "LTP", "LTP_known", "LTP_unseen", "LTP_unknown", "PP", "ALTP")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalRecord:
    index: int
    surface: str
    word_class: str
    prev_tag: object
    assigned_tag: str | None
    gold_tag: str | None
    prob: float
    log2p: float
    terms: tuple = ()
    x: str | None = None


@dataclass
class EvalResult:
    n: int
    LTP: float
    LP: float
    PP: float
    LTP_known: float
    LTP_unseen: float
    LTP_unknown: float
    s: int
    r: int
    ALTP: float
    APP: float
    TP: float | None = None
    records: list = field(default_factory=list, repr=False)
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("records", "metadata")}
        return out


def adjust(ltp: float, s: int, r: int, n: int) -> tuple[float, float]:
    """Adjusted LTP and perplexity: each unknown word is shared among r."""
    if n < 1:
        raise EvaluationError("n must be at least 1")
    if r > s:
        raise EvaluationError(f"r={r} distinct unknown words cannot exceed s={s} occurrences")
    altp = ltp - s * math.log2(r) if r > 1 else ltp
    return altp, 2.0 ** (-altp / n)


def evaluate(model, test: TaggedCorpus, variable: ContextVariable | None = None) -> EvalResult:
    """Walk the test text, scoring each word with a tag history the model
    assigns itself (gold test tags are only recorded, never used)."""
    if test.n == 0:
        raise EvaluationError("cannot evaluate on an empty text")
    if variable is None and isinstance(model, GeneralizedModel):
        variable = model.variable
    regime = getattr(model, "regime", None)
    if regime == "M3":
        model = _with_unseen(model, [t.surface for t in test.tokens])
    if variable is not None:
        variable.reset()

    records = []
    sums = {SEEN: [], UNSEEN: [], UNKNOWN: []}
    unknown_types: set = set()
    context = model.begin
    for i, tok in enumerate(test.tokens):
        if test.is_start(i):
            context = model.begin
            if variable is not None:
                variable.boundary()
        x = variable.value() if variable is not None else None
        sc = model.score(tok.surface, context, x)
        if not sc.prob > 0:
            raise EvaluationError(f"word {tok.surface!r} at {i} received probability {sc.prob}")
        lp = math.log2(sc.prob)
        records.append(EvalRecord(i, tok.surface, sc.word_class, context, sc.assigned, tok.tag,
                                  sc.prob, lp, sc.terms, x))
        sums[sc.word_class].append(lp)
        if sc.word_class == UNKNOWN:
            unknown_types.add(tok.surface)
            if regime == "M2":
                model = _with_unseen(model, [tok.surface])
        if variable is not None:
            variable.observe(tok.surface, sc.assigned)
        context = model.next_context(tok.surface, sc, context)
    if variable is not None:
        variable.reset()

    ltp_known = math.fsum(sums[SEEN])
    ltp_unseen = math.fsum(sums[UNSEEN])
    ltp_unknown = math.fsum(sums[UNKNOWN])
    ltp = math.fsum(sums[SEEN] + sums[UNSEEN] + sums[UNKNOWN])
    n = test.n
    s, r = len(sums[UNKNOWN]), len(unknown_types)
    altp, app = adjust(ltp, s, r, n)
    lp = -ltp / n
    meta = {"regime": regime}
    if regime == "M2":
        meta["m2_note"] = "first occurrence of an out-of-vocabulary word is scored as unknown, later ones as unseen"
    return EvalResult(n=n, LTP=ltp, LP=lp, PP=2.0 ** lp, LTP_known=ltp_known, LTP_unseen=ltp_unseen,
                      LTP_unknown=ltp_unknown, s=s, r=r, ALTP=altp, APP=app,
                      TP=2.0 ** ltp if n <= TP_MAX_N else None, records=records, metadata=meta)


def _with_unseen(model, words):
    if isinstance(model, GeneralizedModel):
        return model.with_base(model.base.with_extra_unseen(words))
    if isinstance(model, BiposModel):
        return model.with_extra_unseen(words)
    raise EvaluationError(f"regime needs a bi-pos model, got {type(model).__name__}")


def sweep_training_size(train: TaggedCorpus, test: TaggedCorpus, sizes: Sequence[int],
                        fixed_vocab: bool = False, c2: float = 1e-4, d1: float = 1e-6,
                        regime: str = "M1", tagset=None) -> list[dict]:
    """Retrain on each prefix of ``train`` and evaluate on ``test``.

    With ``fixed_vocab`` the vocabulary (and its unknown-word estimate)
    comes from the whole training portion, so prefix words missing from
    a prefix become unseen words instead of unknown ones.
    """
    if not sizes:
        return []
    if max(sizes) > train.n:
        raise EvaluationError(f"size {max(sizes)} exceeds the {train.n} training tokens")
    full_vocab = build_vocabulary(train, "full training text") if fixed_vocab else None
    rows = []
    for size in sizes:
        prefix, _ = split_corpus(train, size)
        vocab = full_vocab if fixed_vocab else build_vocabulary(prefix, f"first {size} training tokens")
        model = train_bipos(prefix, vocab, tagset, c2, d1, regime)
        res = evaluate(model, test)
        rows.append({"size": size, "LTP": res.LTP, "LTP_known": res.LTP_known,
                     "LTP_unseen": res.LTP_unseen, "LTP_unknown": res.LTP_unknown,
                     "PP": res.PP, "ALTP": res.ALTP})
    return rows


def grid_search_lambda(model: GeneralizedModel, test: TaggedCorpus,
                       grid: Iterable[float] = LAMBDA_GRID) -> tuple[float, EvalResult, list]:
    """Best lambda by test LTP; a later lambda must win by more than 1e-9,
    so ties go to the smaller value.  Also returns (lambda, LTP) pairs."""
    best_lam, best_res = None, None
    trace = []
    for lam in grid:
        res = evaluate(model.with_lambda(lam), test)
        trace.append((lam, res.LTP))
        if best_res is None or res.LTP > best_res.LTP + 1e-9:
            best_lam, best_res = lam, res
    if best_res is None:
        raise EvaluationError("empty lambda grid")
    return best_lam, best_res, trace


def specific_subset_ltp(result: EvalResult) -> tuple[int, float]:
    """Count and LTP of the positions where the variable was specific."""
    sel = [r.log2p for r in result.records if r.x == "specific"]
    return len(sel), math.fsum(sel)


# ---------------------------------------------------------------------------
# serialization


def _terms_text(terms) -> str:
    return ";".join(f"{g}:{k!r}:{a!r}:{b!r}" for g, k, a, b in terms)


def records_csv(records: Sequence[EvalRecord], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([r.index, r.surface, r.word_class, r.prev_tag, r.assigned_tag, r.gold_tag,
                    repr(r.prob), repr(r.log2p), r.x if r.x is not None else "", _terms_text(r.terms)])
    return buf.getvalue()


def table_csv(rows: Sequence[dict], columns: Sequence[str], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                    for c in columns])
    return buf.getvalue()


def result_json(result: EvalResult, metadata: dict | None = None) -> str:
    out = result.summary()
    out["metadata"] = {**result.metadata, **(metadata or {})}
    return json.dumps(out, sort_keys=True, indent=1) + "\n"
