"""Independent reference computations used as test oracles.

These work from plain token lists with exact rational arithmetic and share
no code with the package.
"""

from collections import Counter, defaultdict
from fractions import Fraction
import math
import random

START = object()


def _contexts(tags, starts):
    starts = set(starts)
    prev = START
    for i, g in enumerate(tags):
        if i in starts:
            prev = START
        yield prev, g
        prev = g


def bipos_prob(pairs, starts, word, prev, c2, d1, vocab=None, regime="M1"):
    """Exact probability of ``word`` after tag ``prev`` (START for sentence start).

    Tags are the distinct training tags; a context never followed by
    anything predicts tags uniformly.
    """
    c2 = Fraction(c2)
    d1 = Fraction(d1)
    words = [w for w, _ in pairs]
    tags = [g for _, g in pairs]
    tagset = list(dict.fromkeys(tags))
    vocab = set(words) if vocab is None else set(vocab)
    trans = defaultdict(Counter)
    for p, g in _contexts(tags, starts):
        trans[p][g] += 1
    emit = defaultdict(Counter)
    for w, g in pairs:
        emit[g][w] += 1
    seen = set(words)
    u = len(vocab - seen)
    d2 = Fraction(len(seen), len(words))
    c1 = 1 - len(tagset) * c2

    def f_tag(g):
        row = trans[prev]
        tot = sum(row.values())
        return Fraction(row[g], tot) if tot else Fraction(1, len(tagset))

    def d_g(g):
        return Fraction(len(emit[g]), sum(emit[g].values()))

    if word in seen:
        total = Fraction(0)
        for g in tagset:
            fw = Fraction(emit[g][word], sum(emit[g].values()))
            if fw == 0:
                continue
            scale = 1 - u * d1 - (d_g(g) if regime == "NEW" else d2)
            total += scale * (c1 * f_tag(g) + c2) * fw
        return total
    if word in vocab:
        return d1
    if regime == "NEW":
        return sum(d_g(g) * (c1 * f_tag(g) + c2) for g in tagset)
    return d2


def bigram_prob(words, starts, word, prev):
    """Unsmoothed bigram estimate C(prev word) / C(prev followed by anything)."""
    starts = set(starts)
    pairs = Counter()
    ctx = Counter()
    p = START
    for i, w in enumerate(words):
        if i in starts:
            p = START
        pairs[(p, w)] += 1
        ctx[p] += 1
        p = w
    return Fraction(pairs[(prev, word)], ctx[prev])


def decompose_pow2(terms):
    """Shares for terms whose factors are all powers of two, exactly.

    Each factor is given by its (negative) integer exponent.
    """
    products = [Fraction(2) ** sum(t) for t in terms]
    S = sum(products)
    width = len(terms[0])
    shares = []
    for j in range(width):
        acc = Fraction(0)
        for t, prod in zip(terms, products):
            acc += prod / S * Fraction(t[j], sum(t))
        shares.append(acc)
    return S, shares


def random_tagged(rng: random.Random, n_tags, n_words, n_tokens, ambiguity=0.3):
    """Random (word, tag) pairs where every tag has a repeated word."""
    tags = [f"T{i}" for i in range(n_tags)]
    words = [f"w{i}" for i in range(n_words)]
    lexicon = {}
    for w in words:
        gs = [rng.choice(tags)]
        if rng.random() < ambiguity:
            gs.append(rng.choice(tags))
        lexicon[w] = sorted(set(gs))
    pairs = []
    # every tag appears with one word at least twice so d_g < 1
    for g in tags:
        w = rng.choice(words)
        if g not in lexicon[w]:
            lexicon[w].append(g)
        pairs += [(w, g), (w, g)]
    while len(pairs) < n_tokens:
        w = rng.choice(words)
        pairs.append((w, rng.choice(lexicon[w])))
    rng.shuffle(pairs)
    starts = sorted({0} | {i for i in range(1, len(pairs)) if rng.random() < 0.15})
    return pairs, starts


def log2_exact(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)
