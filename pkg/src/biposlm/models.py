"""Language models: uniform, unigram, N-gram, the bi-pos class model with
its unknown-word regimes, and the generalized model with context variables.

Every model exposes the same scoring protocol used by the evaluator:

* ``begin`` -- the context used at the start of a sentence;
* ``score(word, context, x=None)`` -- a :class:`WordScore`;
* ``next_context(word, score, context)`` -- the context for the next word.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import TaggedCorpus, Tagset, Token, Vocabulary, build_vocabulary

BEGIN = "<s>"
REGIMES = ("M1", "M2", "M3", "M4", "NEW")
SEEN, UNSEEN, UNKNOWN = "seen", "unseen", "unknown"
GENERAL, SPECIFIC = "general", "specific"

FORMAT_VERSION = 1
PRINTABLE = tuple(chr(c) for c in range(32, 127))
END_OF_WORD = "</w>"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class WordScore:
    """Probability of one word plus the factors that produced it.

    ``terms`` holds ``(tag, k, a, b)`` tuples with ``prob == sum(k*a*b)``:
    for a seen word ``k`` is the scale, ``a`` the smoothed tag factor and
    ``b`` the word factor.  Unknown words under the per-tag regime carry
    ``(tag, d_g, a, 1.0)`` terms.  Other unseen/unknown scores have none.
    """

    prob: float
    word_class: str
    terms: tuple = ()
    assigned: str | None = None

    @property
    def log2p(self) -> float:
        return math.log2(self.prob) if self.prob > 0 else -math.inf


# ---------------------------------------------------------------------------
# simple word models


@dataclass(frozen=True)
class UniformModel:
    vocabulary: Vocabulary
    begin = None

    def score(self, word, context=None, x=None) -> WordScore:
        if word not in self.vocabulary:
            raise ModelError(f"word {word!r} outside the uniform model's vocabulary")
        return WordScore(1.0 / len(self.vocabulary), SEEN)

    def next_context(self, word, score, context):
        return None


@dataclass(frozen=True)
class NgramModel:
    """Word N-gram model with additive smoothing over a closed vocabulary.

    ``order=1`` is the unigram model.  Histories are tuples of the previous
    ``order-1`` words padded with the sentence-start symbol.
    """

    order: int
    vocabulary: Vocabulary
    counts: dict
    v1: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise ModelError("order must be at least 1")
        if self.v1 < 0 or self.v1 * len(self.vocabulary) >= 1:
            raise ModelError(f"v1={self.v1} must lie in [0, 1/|V|)")
        totals = {h: sum(row.values()) for h, row in self.counts.items()}
        object.__setattr__(self, "_totals", totals)

    @property
    def begin(self):
        return (BEGIN,) * (self.order - 1)

    def prob(self, word, history=()) -> float:
        if word not in self.vocabulary:
            raise ModelError(f"word {word!r} outside the N-gram vocabulary")
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        total = self._totals.get(history, 0)
        f = self.counts[history].get(word, 0) / total if total else 1.0 / len(self.vocabulary)
        if self.v1 == 0:
            return f
        return (1.0 - len(self.vocabulary) * self.v1) * f + self.v1

    def score(self, word, context=(), x=None) -> WordScore:
        return WordScore(self.prob(word, context), SEEN)

    def next_context(self, word, score, context):
        if self.order == 1:
            return ()
        return (tuple(context) + (word,))[-(self.order - 1):]


def train_ngram(train: TaggedCorpus, order: int = 2, v1: float = 0.0,
                vocab: Vocabulary | None = None) -> NgramModel:
    vocab = vocab or build_vocabulary(train)
    counts: dict = {}
    hist: tuple = (BEGIN,) * (order - 1)
    for i, tok in enumerate(train.tokens):
        if train.is_start(i):
            hist = (BEGIN,) * (order - 1)
        counts.setdefault(hist, Counter())[tok.surface] += 1
        if order > 1:
            hist = (hist + (tok.surface,))[-(order - 1):]
    return NgramModel(order, vocab, counts, v1)


def UnigramModel(train: TaggedCorpus, v1: float = 0.0, vocab: Vocabulary | None = None) -> NgramModel:
    return train_ngram(train, 1, v1, vocab)


# ---------------------------------------------------------------------------
# character model for unknown words


@dataclass(frozen=True)
class CharUnknownModel:
    """Character unigram spelling model with an end-of-word symbol.

    Probabilities are add-one estimates over the printable ASCII characters
    plus the end symbol, from the distinct words of the training text.
    """

    counts: tuple

    def __post_init__(self):
        if len(self.counts) != len(PRINTABLE) + 1:
            raise ModelError("character counts must cover the alphabet plus the end symbol")
        arr = np.asarray(self.counts, dtype=float) + 1.0
        object.__setattr__(self, "char_probs", arr / arr.sum())
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(PRINTABLE)})

    @classmethod
    def train(cls, words: Iterable[str]) -> "CharUnknownModel":
        index = {c: i for i, c in enumerate(PRINTABLE)}
        counts = [0] * (len(PRINTABLE) + 1)
        for w in words:
            for ch in w:
                i = index.get(ch)
                if i is not None:
                    counts[i] += 1
            counts[-1] += 1
        return cls(tuple(counts))

    @classmethod
    def uniform(cls) -> "CharUnknownModel":
        return cls(tuple([0] * (len(PRINTABLE) + 1)))

    def log2prob(self, word: str) -> float:
        if not word:
            raise ModelError("cannot spell an empty word")
        total = 0.0
        for ch in word:
            i = self._index.get(ch)
            if i is None:
                raise ModelError(f"character {ch!r} outside the printable alphabet")
            total += math.log2(self.char_probs[i])
        return total + math.log2(self.char_probs[-1])

    def prob(self, word: str) -> float:
        return 2.0 ** self.log2prob(word)


def prob_unknown_m4(model: CharUnknownModel, word: str) -> float:
    return model.prob(word)


# ---------------------------------------------------------------------------
# bi-pos model


@dataclass(frozen=True)
class BiposCounts:
    """Raw training counts of a bi-pos model; everything else derives from them."""

    trans: dict  # context tag (or BEGIN) -> {tag: count}
    words: dict  # tag -> {word: count}
    chars: tuple = ()

    @classmethod
    def from_corpus(cls, train: TaggedCorpus) -> "BiposCounts":
        trans: dict = {}
        words: dict = {}
        prev = BEGIN
        for i, tok in enumerate(train.tokens):
            if train.is_start(i):
                prev = BEGIN
            trans.setdefault(prev, Counter())[tok.tag] += 1
            words.setdefault(tok.tag, Counter())[tok.surface] += 1
            prev = tok.tag
        distinct = dict.fromkeys(tok.surface for tok in train.tokens)
        chars = CharUnknownModel.train(distinct).counts
        return cls({c: dict(r) for c, r in trans.items()}, {g: dict(r) for g, r in words.items()}, chars)


class BiposModel:
    """Bi-pos model with a fixed vocabulary and a choice of unknown-word regime.

    Instances are treated as immutable; ``with_regime`` and
    ``with_extra_unseen`` return new models that share the count tables.
    """

    begin = BEGIN

    def __init__(self, counts: BiposCounts, tagset: Tagset, vocabulary: Vocabulary,
                 c2: float = 1e-4, d1: float = 1e-6, regime: str = "M1",
                 extra_unseen: frozenset = frozenset()):
        regime = regime.upper()
        if regime not in REGIMES:
            raise ModelError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}")
        if not counts.words:
            raise ModelError("cannot build a model from an empty training text")
        for g in counts.words:
            if g not in tagset:
                raise ModelError(f"training tag {g!r} is not in tagset {tagset.name!r}")
        self.counts = counts
        self.tagset = tagset
        self.vocabulary = vocabulary
        self.c2 = float(c2)
        self.d1 = float(d1)
        self.regime = regime
        self.extra_unseen = frozenset(extra_unseen)
        self._derive()
        self._validate()

    # -- derived tables ----------------------------------------------------
    def _derive(self):
        counts = self.counts
        # tags never seen in training get no share of the tag distribution
        self.tags = tuple(g for g in self.tagset.tags if g in counts.words)
        self.c1 = 1.0 - len(self.tags) * self.c2
        self.tag_totals = {g: sum(counts.words[g].values()) for g in self.tags}
        self.word_f = {g: {w: k / self.tag_totals[g] for w, k in counts.words[g].items()} for g in self.tags}
        word_tags: dict = {}
        for g in self.tags:
            for w in counts.words[g]:
                word_tags.setdefault(w, []).append(g)
        self.word_tags = {w: tuple(gs) for w, gs in word_tags.items()}
        self.trans_f = {}
        for ctx in (BEGIN,) + self.tagset.tags:
            row = counts.trans.get(ctx, {})
            total = sum(row.values())
            if total:
                self.trans_f[ctx] = {g: row.get(g, 0) / total for g in self.tags}
            else:
                self.trans_f[ctx] = {g: 1.0 / len(self.tags) for g in self.tags}
        self.n_train = sum(self.tag_totals.values())
        self.distinct_train = len(self.word_tags)
        if self.vocabulary.total > 0:
            self.d2 = self.vocabulary.distinct / self.vocabulary.total
        else:
            self.d2 = self.distinct_train / self.n_train
        self.d_g = {}
        for g in self.tagset.tags:
            occ = self.tag_totals.get(g, 0)
            self.d_g[g] = len(counts.words[g]) / occ if occ else self.d2
        missing = [w for w in self.word_tags if w not in self.vocabulary]
        if missing:
            raise ModelError(f"{len(missing)} training words are missing from the vocabulary, e.g. {missing[0]!r}")
        self.base_u = len(self.vocabulary) - self.distinct_train
        self.u = self.base_u + sum(1 for w in self.extra_unseen if w not in self.vocabulary)
        self.char_model = CharUnknownModel(counts.chars) if counts.chars else CharUnknownModel.uniform()

    def _validate(self):
        if not 0 <= self.c2 or self.c2 * len(self.tags) >= 1:
            raise ModelError(f"c2={self.c2} must lie in [0, 1/|G|) with |G|={len(self.tags)}")
        if self.d1 <= 0:
            raise ModelError("d1 must be positive")
        if not 0 < self.d2 < 1:
            raise ModelError(f"d2={self.d2} must lie strictly between 0 and 1")
        if self.regime == "NEW":
            worst = max(self.d_g[g] for g in self.tags)
            if self.u * self.d1 + worst >= 1:
                bad = [g for g in self.tags if self.u * self.d1 + self.d_g[g] >= 1]
                raise ModelError(f"per-tag unknown estimate leaves no mass for seen words of tags {bad}")
        elif self.u * self.d1 + self.d2 >= 1:
            raise ModelError(f"u*d1 + d2 = {self.u * self.d1 + self.d2} must be below 1")

    # -- copies --------------------------------------------------------------
    def _copy(self, **changes) -> "BiposModel":
        new = object.__new__(BiposModel)
        new.__dict__.update(self.__dict__)
        new.__dict__.update(changes)
        new.u = new.base_u + sum(1 for w in new.extra_unseen if w not in new.vocabulary)
        new._validate()
        return new

    def with_regime(self, regime: str) -> "BiposModel":
        regime = regime.upper()
        if regime not in REGIMES:
            raise ModelError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}")
        return self._copy(regime=regime)

    def with_extra_unseen(self, words: Iterable[str]) -> "BiposModel":
        extra = self.extra_unseen | {w for w in words if w not in self.word_tags}
        return self._copy(extra_unseen=frozenset(extra))

    # -- classification ----------------------------------------------------------
    def word_class(self, word: str) -> str:
        if word in self.word_tags:
            return SEEN
        if word in self.vocabulary or word in self.extra_unseen:
            return UNSEEN
        return UNKNOWN

    def _check_context(self, prev_tag):
        if prev_tag not in self.trans_f:
            raise ModelError(f"unknown context tag {prev_tag!r}")

    def tag_factor(self, g: str, prev_tag: str) -> float:
        return self.c1 * self.trans_f[prev_tag][g] + self.c2

    def scale(self, g: str | None = None) -> float:
        """Constant factor in front of a seen word's term."""
        if self.regime == "NEW":
            return 1.0 - self.u * self.d1 - self.d_g[g]
        return 1.0 - self.u * self.d1 - self.d2

    # -- scoring -----------------------------------------------------------------
    def _seen_terms(self, word, prev_tag, word_factor):
        terms = []
        for g in self.word_tags[word]:
            terms.append((g, self.scale(g), self.tag_factor(g, prev_tag), word_factor(word, g)))
        return tuple(terms)

    def _score(self, word, prev_tag, word_factor) -> WordScore:
        self._check_context(prev_tag)
        cls = self.word_class(word)
        if cls == SEEN:
            terms = self._seen_terms(word, prev_tag, word_factor)
            if self.regime == "NEW":
                prob = math.fsum(k * a * b for _, k, a, b in terms)
            else:
                prob = terms[0][1] * math.fsum(a * b for _, _, a, b in terms)
            return WordScore(prob, SEEN, terms, _best_term(terms))
        guess = self.likely_tag(prev_tag)
        if cls == UNSEEN:
            return WordScore(self.d1, UNSEEN, (), guess)
        if self.regime == "NEW":
            terms = tuple((g, self.d_g[g], self.tag_factor(g, prev_tag), 1.0) for g in self.tags)
            return WordScore(math.fsum(k * a for _, k, a, _ in terms), UNKNOWN, terms, guess)
        if self.regime == "M4":
            return WordScore(self.d2 * self.char_model.prob(word), UNKNOWN, (), guess)
        return WordScore(self.d2, UNKNOWN, (), guess)

    def _f_word(self, word, g):
        return self.word_f[g].get(word, 0.0)

    def prob_word(self, word: str, prev_tag: str) -> WordScore:
        return self._score(word, prev_tag, self._f_word)

    def score(self, word, context, x=None) -> WordScore:
        return self._score(word, context, self._f_word)

    def next_context(self, word, score, context):
        return score.assigned

    def seen_sum(self, word: str, prev_tag: str) -> float:
        """The unscaled sum over tags of (c1 f(g|prev) + c2) f(word|g)."""
        self._check_context(prev_tag)
        return math.fsum(self.tag_factor(g, prev_tag) * self.word_f[g][word] for g in self.word_tags.get(word, ()))

    def likely_tag(self, prev_tag: str) -> str:
        row = self.trans_f[prev_tag]
        best = self.tags[0]
        for g in self.tags:
            if row[g] > row[best]:
                best = g
        return best

    def assign_tag(self, word: str, prev_tag: str) -> str:
        return self.prob_word(word, prev_tag).assigned

    def unknown_mass(self, prev_tag: str) -> float:
        """Probability reserved for the unknown symbol in this context."""
        self._check_context(prev_tag)
        if self.regime == "NEW":
            return math.fsum(self.d_g[g] * self.tag_factor(g, prev_tag) for g in self.tags)
        return self.d2

    def summary(self) -> dict:
        return {
            "vocabulary": len(self.vocabulary),
            "tags": len(self.tags),
            "tagset_size": self.tagset.size,
            "n_train": self.n_train,
            "distinct_train": self.distinct_train,
            "c1": self.c1,
            "c2": self.c2,
            "d1": self.d1,
            "d2": self.d2,
            "u": self.u,
            "regime": self.regime,
            "d_g": {g: self.d_g[g] for g in self.tags},
        }


def _best_term(terms) -> str:
    # first maximum wins, terms come in tagset order
    best, best_val = terms[0][0], terms[0][1] * terms[0][2] * terms[0][3]
    for g, k, a, b in terms[1:]:
        if k * a * b > best_val:
            best, best_val = g, k * a * b
    return best


def train_bipos(train: TaggedCorpus, vocab: Vocabulary | None = None, tagset: Tagset | None = None,
                c2: float = 1e-4, d1: float = 1e-6, regime: str = "M1") -> BiposModel:
    if train.n == 0:
        raise ModelError("cannot train on an empty text")
    if vocab is None:
        vocab = build_vocabulary(train)
    if tagset is None:
        tagset = Tagset("training", tuple(dict.fromkeys(train.tags)))
    return BiposModel(BiposCounts.from_corpus(train), tagset, vocab, c2, d1, regime)


def assign_tag(model: BiposModel, word: str, prev_tag: str) -> str:
    return model.assign_tag(word, prev_tag)


def prob_word(model: BiposModel, word: str, prev_tag: str) -> WordScore:
    return model.prob_word(word, prev_tag)


# ---------------------------------------------------------------------------
# context variables


class ContextVariable:
    """Two-valued variable updated left to right over a token stream.

    ``value()`` gives the value for the upcoming word, ``observe`` feeds the
    word once it has been read, ``boundary`` signals a sentence start and
    ``reset`` restarts the stream.
    """

    name = "variable"
    values = (GENERAL, SPECIFIC)

    def reset(self):
        pass

    def boundary(self):
        pass

    def value(self) -> str:
        return GENERAL

    def observe(self, surface: str, tag: str | None):
        pass

    @property
    def label(self) -> str:
        return self.name


def is_phrase_tag(tag: str | None, prefixes: Sequence[str] = ("J", "N", "R")) -> bool:
    """Adjective, adverb and noun tags keep a noun phrase going."""
    return bool(tag) and tag.startswith(tuple(prefixes))


class NounPhraseVariable(ContextVariable):
    """Specific from just after a trigger word until the noun phrase ends."""

    def __init__(self, name: str, triggers: Iterable[str], phrase_prefixes: Sequence[str] = ("J", "N", "R")):
        self.name = name
        self.triggers = frozenset(t.lower() for t in triggers)
        self.phrase_prefixes = tuple(phrase_prefixes)
        self._specific = False

    def reset(self):
        self._specific = False

    def boundary(self):
        self._specific = False

    def value(self) -> str:
        return SPECIFIC if self._specific else GENERAL

    def observe(self, surface, tag):
        if surface.lower() in self.triggers:
            self._specific = True
        elif self._specific and not is_phrase_tag(tag, self.phrase_prefixes):
            self._specific = False


class RandomVariable(ContextVariable):
    def __init__(self, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ModelError(f"probability {p} outside [0, 1]")
        self.name = "random"
        self.p = float(p)
        self.seed = int(seed)
        self.reset()

    def reset(self):
        self._rng = np.random.default_rng(self.seed)
        self._next = None

    def value(self) -> str:
        if self._next is None:
            self._next = bool(self._rng.random() < self.p)
        return SPECIFIC if self._next else GENERAL

    def observe(self, surface, tag):
        if self._next is None:
            self._rng.random()
        self._next = None

    @property
    def label(self) -> str:
        return f"random:{self.p!r}"


def singular_variable(phrase_prefixes=("J", "N", "R")) -> NounPhraseVariable:
    return NounPhraseVariable("singular", ("this", "a", "an"), phrase_prefixes)


def during_variable(phrase_prefixes=("J", "N", "R")) -> NounPhraseVariable:
    return NounPhraseVariable("during", ("during",), phrase_prefixes)


def builtin_variables(p: float = 0.01, seed: int = 0, phrase_prefixes=("J", "N", "R")) -> dict:
    return {
        "singular": singular_variable(phrase_prefixes),
        "during": during_variable(phrase_prefixes),
        "random": RandomVariable(p, seed),
    }


def make_variable(label: str, seed: int = 0, phrase_prefixes=("J", "N", "R")) -> ContextVariable:
    """Build a variable from ``singular``, ``during`` or ``random:<p>``."""
    name, _, arg = label.strip().lower().partition(":")
    if name == "singular":
        return singular_variable(phrase_prefixes)
    if name == "during":
        return during_variable(phrase_prefixes)
    if name == "random":
        try:
            p = float(arg) if arg else 0.01
        except ValueError:
            raise ModelError(f"bad probability in variable {label!r}") from None
        return RandomVariable(p, seed)
    raise ModelError(f"unknown variable {label!r}; expected singular, during or random:<p>")


# ---------------------------------------------------------------------------
# generalized model


class GeneralizedModel:
    """Bi-pos model whose word factor is interpolated with a specific
    distribution whenever the context variable says ``specific``."""

    def __init__(self, base: BiposModel, variable: ContextVariable, specific: Mapping, lam: float = 0.5):
        if not 0.0 <= lam <= 1.0:
            raise ModelError(f"lambda={lam} outside [0, 1]")
        self.base = base
        self.variable = variable
        self.specific = {g: dict(row) for g, row in specific.items() if sum(row.values()) > 0}
        for g, row in self.specific.items():
            for w in row:
                if w not in base.word_f.get(g, {}):
                    raise ModelError(f"specific count for {w!r}/{g!r} not backed by general counts")
        self.lam = float(lam)
        self.specific_f = {}
        for g, row in self.specific.items():
            total = sum(row.values())
            self.specific_f[g] = {w: k / total for w, k in row.items()}

    @property
    def begin(self):
        return self.base.begin

    @property
    def regime(self):
        return self.base.regime

    def with_lambda(self, lam: float) -> "GeneralizedModel":
        new = object.__new__(GeneralizedModel)
        new.__dict__.update(self.__dict__)
        if not 0.0 <= lam <= 1.0:
            raise ModelError(f"lambda={lam} outside [0, 1]")
        new.lam = float(lam)
        return new

    def with_base(self, base: BiposModel) -> "GeneralizedModel":
        new = object.__new__(GeneralizedModel)
        new.__dict__.update(self.__dict__)
        new.base = base
        return new

    def p_comb(self, word: str, g: str, x: str | None) -> float:
        general = self.base.word_f[g].get(word, 0.0)
        if x != SPECIFIC or g not in self.specific_f or self.lam == 1.0:
            return general
        return self.lam * general + (1.0 - self.lam) * self.specific_f[g].get(word, 0.0)

    def prob_word(self, word: str, prev_tag: str, x: str | None = GENERAL) -> WordScore:
        if x is not None and x not in self.variable.values:
            raise ModelError(f"value {x!r} not allowed for variable {self.variable.name!r}")
        if x != SPECIFIC:
            return self.base.prob_word(word, prev_tag)
        return self.base._score(word, prev_tag, lambda w, g: self.p_comb(w, g, x))

    def score(self, word, context, x=None) -> WordScore:
        return self.prob_word(word, context, x)

    def next_context(self, word, score, context):
        return score.assigned


def count_specific(train: TaggedCorpus, variable: ContextVariable, tags: Iterable[str] | None = None) -> dict:
    """Counts of f(word | tag, X=specific) over a training stream (gold tags)."""
    allowed = set(tags) if tags is not None else None
    out: dict = {}
    variable.reset()
    for i, tok in enumerate(train.tokens):
        if train.is_start(i):
            variable.boundary()
        if variable.value() == SPECIFIC and (allowed is None or tok.tag in allowed):
            out.setdefault(tok.tag, Counter())[tok.surface] += 1
        variable.observe(tok.surface, tok.tag)
    variable.reset()
    return {g: dict(row) for g, row in out.items()}


def train_generalized(train: TaggedCorpus, base: BiposModel, variable: ContextVariable,
                      lam: float = 0.5, tags: Iterable[str] | None = None) -> GeneralizedModel:
    return GeneralizedModel(base, variable, count_specific(train, variable, tags), lam)


def prob_word_generalized(model: GeneralizedModel, word: str, prev_tag: str, x: str) -> WordScore:
    return model.prob_word(word, prev_tag, x)


# ---------------------------------------------------------------------------
# generic unsmoothed N-pos model with pluggable contexts


def previous_word(prev: Token | None):
    return prev.surface if prev is not None else BEGIN


def previous_tag(prev: Token | None):
    return prev.tag if prev is not None else BEGIN


def no_context(prev: Token | None):
    return None


class NposModel:
    """Unsmoothed class model p(w) = sum_g f(g | tc) f(w | g, wc).

    ``tag_context`` and ``word_context`` map the previous token (``None`` at
    a sentence start) to a context key.  Scoring here uses gold histories,
    so it serves as an estimator for structural checks rather than for
    evaluation.
    """

    def __init__(self, train: TaggedCorpus, tag_context: Callable = previous_tag,
                 word_context: Callable = no_context):
        self.tag_context = tag_context
        self.word_context = word_context
        self.tag_counts: dict = {}
        self.word_counts: dict = {}
        prev = None
        for i, tok in enumerate(train.tokens):
            if train.is_start(i):
                prev = None
            self.tag_counts.setdefault(tag_context(prev), Counter())[tok.tag] += 1
            self.word_counts.setdefault((tok.tag, word_context(prev)), Counter())[tok.surface] += 1
            prev = tok
        self.vocabulary = tuple(dict.fromkeys(train.surfaces))

    def prob(self, word: str, prev: Token | None) -> float:
        trow = self.tag_counts.get(self.tag_context(prev))
        if not trow:
            raise ModelError("context never seen in training")
        ttotal = sum(trow.values())
        wc = self.word_context(prev)
        total = 0.0
        for g, k in trow.items():
            wrow = self.word_counts.get((g, wc))
            if not wrow:
                continue
            total += (k / ttotal) * (wrow.get(word, 0) / sum(wrow.values()))
        return total

    def mass(self, prev: Token | None) -> float:
        """Sum over every training word of its probability in this context."""
        trow = self.tag_counts.get(self.tag_context(prev), {})
        ttotal = sum(trow.values())
        wc = self.word_context(prev)
        # a tag context can predict tags whose word context was never seen
        out = []
        for g, k in trow.items():
            wrow = self.word_counts.get((g, wc))
            if wrow:
                out.append(k / ttotal * math.fsum(c / sum(wrow.values()) for c in wrow.values()))
        return math.fsum(out)


# ---------------------------------------------------------------------------
# normalization


def check_normalization(model, prev_tag: str, x: str | None = None, test_unknown: Iterable[str] = ()) -> float:
    """|1 - total probability| for one context.

    The total runs over the vocabulary (plus any extra unseen words) and
    adds the unknown-symbol mass.
    """
    base = model.base if isinstance(model, GeneralizedModel) else model
    words = list(base.vocabulary) + sorted(w for w in base.extra_unseen if w not in base.vocabulary)
    if isinstance(model, GeneralizedModel):
        probs = [model.prob_word(w, prev_tag, x).prob for w in words]
    else:
        probs = [model.prob_word(w, prev_tag).prob for w in words]
    # training words outside a fixed vocabulary are impossible by construction
    return abs(1.0 - math.fsum(probs + [base.unknown_mass(prev_tag)]))


# ---------------------------------------------------------------------------
# serialization


def _sorted_counts(d: Mapping) -> dict:
    return {str(k): {str(w): int(c) for w, c in sorted(row.items())} for k, row in sorted(d.items())}


def model_to_dict(model) -> dict:
    if isinstance(model, GeneralizedModel):
        out = model_to_dict(model.base)
        out["kind"] = "generalized"
        out["variable"] = model.variable.label
        if isinstance(model.variable, RandomVariable):
            out["variable_seed"] = model.variable.seed
        if isinstance(model.variable, NounPhraseVariable):
            out["phrase_prefixes"] = list(model.variable.phrase_prefixes)
        out["lambda"] = model.lam
        out["specific"] = _sorted_counts(model.specific)
        return out
    if not isinstance(model, BiposModel):
        raise ModelError(f"cannot serialize {type(model).__name__}")
    return {
        "format": "biposlm-model",
        "version": FORMAT_VERSION,
        "kind": "bipos",
        "tagset": {"name": model.tagset.name, "tags": list(model.tagset.tags)},
        "vocabulary": {
            "words": list(model.vocabulary.words),
            "source": model.vocabulary.source,
            "total": model.vocabulary.total,
            "distinct": model.vocabulary.distinct,
        },
        "c2": model.c2,
        "d1": model.d1,
        "regime": model.regime,
        "extra_unseen": sorted(model.extra_unseen),
        "trans": _sorted_counts(model.counts.trans),
        "words": _sorted_counts(model.counts.words),
        "chars": list(model.counts.chars),
    }


def model_from_dict(data: Mapping):
    if data.get("format") != "biposlm-model":
        raise ModelError("not a model file")
    if data.get("version") != FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {data.get('version')!r}")
    tagset = Tagset(data["tagset"]["name"], tuple(data["tagset"]["tags"]))
    v = data["vocabulary"]
    vocab = Vocabulary({w: i for i, w in enumerate(v["words"])}, v["source"], v["total"], v["distinct"])
    # restore tagset order inside each count row so tie-breaking is unchanged
    order = tagset.index
    words = {g: data["words"][g] for g in sorted(data["words"], key=lambda g: order.get(g, len(order)))}
    counts = BiposCounts(data["trans"], words, tuple(data["chars"]))
    base = BiposModel(counts, tagset, vocab, data["c2"], data["d1"], data["regime"],
                      frozenset(data.get("extra_unseen", ())))
    if data.get("kind") != "generalized":
        return base
    prefixes = tuple(data.get("phrase_prefixes", ("J", "N", "R")))
    variable = make_variable(data["variable"], data.get("variable_seed", 0), prefixes)
    return GeneralizedModel(base, variable, data["specific"], data["lambda"])


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def loads_model(text: str):
    return model_from_dict(json.loads(text))


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
