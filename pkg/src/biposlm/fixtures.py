"""Bundled fixtures and the generator for the synthetic micro-corpus.

The micro-corpus uses six tags.  Open classes (nouns, verbs, adjectives)
draw from large Zipf-distributed vocabularies, so a held-out tail contains
many words never seen in training; closed classes have a handful of words.
Nouns following "a", "an" or "this" come from a restricted singular list.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

MICRO_TAGS = ("AT", "JJ", "N", "V", "IN", "PU")
FIXTURES = ("micro.txt", "micro_tags.tsv", "bddad_train.txt", "bddad_test.txt", "bddad_tags.tsv")

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "pl", "gr")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ou")


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}")
    return Path(str(resources.files("biposlm").joinpath("data", "fixtures", name)))


def _pseudo_words(rng, count, suffix):
    out, seen = [], set()
    while len(out) < count:
        syl = rng.integers(1, 4)
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syl)) + suffix
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def _zipf_picker(rng, words, s=0.9):
    ranks = np.arange(1, len(words) + 1)
    p = ranks ** -s
    p /= p.sum()
    return lambda: words[rng.choice(len(words), p=p)]


def generate_micro(n_tokens: int = 2000, seed: int = 7) -> list[list[tuple[str, str]]]:
    """Sentences of (word, tag) pairs, about ``n_tokens`` tokens in total."""
    rng = np.random.default_rng(seed)
    nouns = _pseudo_words(rng, 500, "")
    singular = nouns[:60]
    verbs = _pseudo_words(rng, 220, "s")
    adjs = _pseudo_words(rng, 150, "y")
    noun = _zipf_picker(rng, nouns)
    sing = _zipf_picker(rng, singular, 1.3)
    verb = _zipf_picker(rng, verbs)
    adj = _zipf_picker(rng, adjs)

    def det():
        return str(rng.choice(["the", "the", "the", "a", "an", "this", "that"]))

    def np_phrase():
        d = det()
        out = [(d, "AT")]
        while rng.random() < 0.35:
            out.append((adj(), "JJ"))
        out.append((sing() if d in ("a", "an", "this") else noun(), "N"))
        return out

    sentences = []
    total = 0
    while total < n_tokens:
        sent = np_phrase() + [(verb(), "V")]
        r = rng.random()
        if r < 0.45:
            sent += np_phrase()
        elif r < 0.8:
            prep = str(rng.choice(["of", "in", "on", "with", "to", "during"]))
            sent += [(prep, "IN")] + np_phrase()
        if rng.random() < 0.25:
            sent += [(",", "PU"), ("and", "IN")] + np_phrase() + [(verb(), "V")]
        sent.append((".", "PU"))
        sentences.append(sent)
        total += len(sent)
    return sentences


def format_lob(sentences, sample="M01", per_line=10) -> str:
    items = []
    for sent in sentences:
        items.append("^")
        items.extend(f"{w}_{g}" for w, g in sent)
    lines = []
    for i in range(0, len(items), per_line):
        lines.append(f"{sample} {i // per_line + 1} " + " ".join(items[i:i + per_line]))
    return "\n".join(lines) + "\n"


def write_fixtures(directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "micro.txt").write_text(format_lob(generate_micro()), encoding="utf-8")
    (directory / "micro_tags.tsv").write_text(
        "# six-tag micro tagset\n# source=micro target=micro\n" + "".join(f"{t}\t{t}\n" for t in MICRO_TAGS),
        encoding="utf-8")
    (directory / "bddad_train.txt").write_text("^ a_X b_X c_X d_X\n", encoding="utf-8")
    (directory / "bddad_test.txt").write_text("^ b_X d_X d_X a_X d_X\n", encoding="utf-8")
    (directory / "bddad_tags.tsv").write_text("# one-tag universe\n# source=x target=x\nX\tX\n", encoding="utf-8")


if __name__ == "__main__":
    write_fixtures(Path(__file__).parent / "data" / "fixtures")
