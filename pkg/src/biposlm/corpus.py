"""Tagged corpus reading, tagsets, tag-merging maps and vocabularies.

Corpora use the LOB layout: an optional line prefix (sample id and line
number), then whitespace separated ``surface_TAG`` items.  A bare ``^``
marks the start of a sentence.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

SENTENCE_MARK = "^"
BUILTIN_TAGMAPS = ("lob135", "lob88", "lob42", "lob24", "t135_t88", "t88_t42", "t42_t24")

_PREFIX_RE = re.compile(r"^[A-Za-z]\d+\s+\d+(?:\s+|$)")
# typographic escapes that precede a surface, e.g. "\0Mr" or "\OMr"
_MARKER_RE = re.compile(r"^(?:\\[0O])+")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    tag: str
    raw_tag: str = ""

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("token surface must be non-empty")


@dataclass(frozen=True)
class Tagset:
    name: str
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tags) == 0:
            raise CorpusError("a tagset needs at least one tag")
        if len(set(self.tags)) != len(self.tags):
            raise CorpusError(f"duplicate tags in tagset {self.name!r}")

    @property
    def size(self) -> int:
        return len(self.tags)

    def __contains__(self, tag) -> bool:
        return tag in self.index

    def __iter__(self) -> Iterator[str]:
        return iter(self.tags)

    def __len__(self) -> int:
        return len(self.tags)

    @property
    def index(self) -> dict[str, int]:
        # cached lazily; the dataclass is frozen so go through __dict__
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {t: i for i, t in enumerate(self.tags)}
            object.__setattr__(self, "_index", idx)
        return idx


@dataclass(frozen=True)
class TagMap:
    """Projection from raw corpus tags onto a merged tagset.

    An ``open`` map passes through any tag unchanged; it is used when the
    corpus is already tagged with the tags the model should see.
    """

    source_tagset: str
    target_tagset: str
    entries: dict[str, str] = field(default_factory=dict)
    open: bool = False

    def __post_init__(self):
        if not self.open and not self.entries:
            raise CorpusError("a closed tag map needs at least one entry")

    def __contains__(self, raw) -> bool:
        return self.open or raw in self.entries

    def merge(self, raw: str) -> str:
        return merge_tag(raw, self)

    def target(self) -> Tagset:
        """Target tags in order of first appearance in the map."""
        if self.open:
            raise CorpusError("an open tag map has no fixed target tagset")
        seen = dict.fromkeys(self.entries.values())
        return Tagset(self.target_tagset, tuple(seen))

    @classmethod
    def identity(cls, tags: Iterable[str] = (), name: str = "identity") -> "TagMap":
        tags = list(tags)
        if not tags:
            return cls(name, name, {}, open=True)
        return cls(name, name, {t: t for t in tags})

    def compose(self, other: "TagMap") -> "TagMap":
        """Apply ``self`` and then ``other``."""
        entries = {raw: merge_tag(mid, other) for raw, mid in self.entries.items()}
        return TagMap(self.source_tagset, other.target_tagset, entries)


def parse_tagmap(text: str, name: str = "tagmap") -> TagMap:
    entries: dict[str, str] = {}
    source, target = name, name
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = re.match(r"#\s*source=(\S+)\s+target=(\S+)", stripped)
            if m:
                source, target = m.group(1), m.group(2)
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise CorpusError(f"{name}:{lineno}: expected 'raw<TAB>merged', got {line!r}")
        raw, merged = parts[0].strip(), parts[1].strip()
        if raw in entries and entries[raw] != merged:
            raise CorpusError(f"{name}:{lineno}: tag {raw!r} mapped twice")
        entries[raw] = merged
    return TagMap(source, target, entries)


def load_tagmap(source: str | Path) -> TagMap:
    """Load a tag map by built-in name, ``identity``, or file path."""
    name = str(source)
    if name == "identity":
        return TagMap.identity()
    if name in BUILTIN_TAGMAPS:
        text = resources.files("biposlm").joinpath("data", "tagmaps", name + ".tsv").read_text("utf-8")
        return parse_tagmap(text, name)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read tag map {path}: {exc.strerror or exc}") from exc
    return parse_tagmap(text, path.stem)


@dataclass(frozen=True)
class TaggedCorpus:
    tokens: tuple[Token, ...] = ()
    sentence_starts: tuple[int, ...] = ()
    skipped: int = 0

    def __post_init__(self):
        starts = self.sentence_starts
        if self.tokens and (not starts or starts[0] != 0):
            raise CorpusError("first sentence must start at index 0")
        for a, b in zip(starts, starts[1:]):
            if b <= a:
                raise CorpusError("sentence starts must be strictly increasing")
        if starts and starts[-1] >= max(len(self.tokens), 1):
            raise CorpusError("sentence start beyond end of corpus")

    @property
    def n(self) -> int:
        return len(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def is_start(self, i: int) -> bool:
        return i in self._start_set

    @property
    def _start_set(self) -> frozenset:
        s = self.__dict__.get("_starts")
        if s is None:
            s = frozenset(self.sentence_starts)
            object.__setattr__(self, "_starts", s)
        return s

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.tag for t in self.tokens]

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, str]], sentence_starts: Sequence[int] | None = None):
        tokens = tuple(Token(w, g, g) for w, g in pairs)
        if sentence_starts is None:
            sentence_starts = (0,) if tokens else ()
        return cls(tokens, tuple(sentence_starts))


@dataclass(frozen=True)
class Vocabulary:
    words: dict[str, int]
    source: str = ""
    total: int = 0
    distinct: int = 0

    def __contains__(self, word) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def id(self, word: str) -> int:
        return self.words[word]

    def extended(self, extra: Iterable[str], source: str | None = None) -> "Vocabulary":
        """Vocabulary with extra words appended; the recorded counts stay."""
        words = dict(self.words)
        for w in extra:
            if w not in words:
                words[w] = len(words)
        return Vocabulary(words, source or self.source, self.total, self.distinct)


def _strip_markers(surface: str) -> str:
    return _MARKER_RE.sub("", surface)


def read_lob(stream, tag_map: TagMap) -> TaggedCorpus:
    """Parse a tagged text stream.

    ``stream`` may be a file object, a ``Path`` or a string holding the
    text itself.
    """
    if isinstance(stream, Path):
        stream = open(stream, encoding="utf-8")
        close = True
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
        close = True
    else:
        close = False

    tokens: list[Token] = []
    starts: list[int] = []
    skipped = 0
    pending_start = True
    try:
        for lineno, line in enumerate(stream, 1):
            line = _PREFIX_RE.sub("", line.lstrip(), count=1)
            for item in line.split():
                if item == SENTENCE_MARK:
                    pending_start = True
                    continue
                cut = item.rfind("_")
                if cut < 0:
                    skipped += 1
                    continue
                surface = _strip_markers(item[:cut])
                raw = item[cut + 1:].replace("\\$", "$")
                if not surface or not raw:
                    skipped += 1
                    continue
                if raw not in tag_map:
                    raise CorpusError(f"line {lineno}: tag {raw!r} is not in tag map {tag_map.source_tagset!r}")
                if pending_start or not tokens:
                    starts.append(len(tokens))
                    pending_start = False
                tokens.append(Token(surface, merge_tag(raw, tag_map), raw))
    finally:
        if close:
            stream.close()
    if skipped:
        logger.info("skipped %d items without a tag", skipped)
    return TaggedCorpus(tuple(tokens), tuple(starts), skipped)


def write_lob(corpus: TaggedCorpus, raw: bool = False) -> str:
    """Format a corpus as ``surface_tag`` items, one sentence per line."""
    lines = []
    bounds = list(corpus.sentence_starts) + [corpus.n]
    for a, b in zip(bounds, bounds[1:]):
        items = ["^"]
        for tok in corpus.tokens[a:b]:
            items.append(f"{tok.surface}_{tok.raw_tag if raw else tok.tag}")
        lines.append(" ".join(items))
    return "\n".join(lines) + ("\n" if lines else "")


def merge_tag(raw: str, tag_map: TagMap) -> str:
    if tag_map.open:
        return raw
    try:
        return tag_map.entries[raw]
    except KeyError:
        raise CorpusError(f"tag {raw!r} is not in tag map {tag_map.source_tagset!r}") from None


def split_corpus(corpus: TaggedCorpus, n_train: int) -> tuple[TaggedCorpus, TaggedCorpus]:
    if n_train < 0 or n_train > corpus.n:
        raise CorpusError(f"n_train={n_train} outside [0, {corpus.n}]")
    head = corpus.tokens[:n_train]
    tail = corpus.tokens[n_train:]
    train_starts = tuple(s for s in corpus.sentence_starts if s < n_train)
    test_starts = [s - n_train for s in corpus.sentence_starts if s >= n_train]
    # the cut may fall mid-sentence; the remainder still begins a stream
    if tail and (not test_starts or test_starts[0] != 0):
        test_starts.insert(0, 0)
    return (TaggedCorpus(head, train_starts), TaggedCorpus(tail, tuple(test_starts)))


def build_vocabulary(train: TaggedCorpus, source: str = "training text") -> Vocabulary:
    words: dict[str, int] = {}
    for tok in train.tokens:
        if tok.surface not in words:
            words[tok.surface] = len(words)
    return Vocabulary(words, source, total=train.n, distinct=len(words))


def concat(corpora: Iterable[TaggedCorpus]) -> TaggedCorpus:
    tokens: list[Token] = []
    starts: list[int] = []
    for c in corpora:
        starts.extend(s + len(tokens) for s in c.sentence_starts)
        tokens.extend(c.tokens)
    return TaggedCorpus(tuple(tokens), tuple(starts))
