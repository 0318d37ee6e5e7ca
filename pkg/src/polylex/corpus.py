"""Corpus ingestion, cleaning and corpus-level transforms.

A corpus is an ordered list of documents, one document per input line,
each document a list of whitespace-free tokens. All transforms are pure:
they build a new Corpus and never mutate their input.
"""

from __future__ import annotations

import unicodedata
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from random import Random

from .errors import IngestionError, PolylexError

Document = list[str]

# Code point ranges stripped as emoji, plus the selectors/joiners that only
# occur inside emoji sequences.
_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),  # SMP pictograph blocks: emoticons, transport, symbols
    (0x2600, 0x27BF),    # miscellaneous symbols and dingbats
    (0x2B00, 0x2BFF),    # miscellaneous symbols and arrows (stars etc.)
    (0xFE00, 0xFE0F),    # variation selectors
    (0x200D, 0x200D),    # zero width joiner
    (0x20E3, 0x20E3),    # combining enclosing keycap
)

# Only the Basic Latin letter range is case-folded; other scripts pass through.
_ASCII_LOWER = {cp: cp + 32 for cp in range(ord("A"), ord("Z") + 1)}

_DIGITS = frozenset("0123456789")


@lru_cache(maxsize=8192)
def _dropped(ch: str) -> bool:
    cp = ord(ch)
    for lo, hi in _EMOJI_RANGES:
        if lo <= cp <= hi:
            return True
    return unicodedata.category(ch).startswith("P")


def preprocess(raw_line: str) -> Document:
    """Clean one raw line into a token list.

    Removes emoji and punctuation code points, lowercases A-Z, and splits on
    runs of whitespace. Digits and non-Roman scripts are kept as-is.
    """
    kept = "".join(ch for ch in raw_line if not _dropped(ch))
    return kept.translate(_ASCII_LOWER).split()


def _check_token(tok: str) -> None:
    if not tok or tok.split() != [tok]:
        raise PolylexError(f"invalid token {tok!r}: tokens must be non-empty and whitespace-free")


@dataclass
class Corpus:
    """Ordered documents of preprocessed tokens."""

    documents: list[Document]
    source_tag: str = ""

    def __post_init__(self):
        for doc in self.documents:
            for tok in doc:
                _check_token(tok)

    def __len__(self) -> int:
        return len(self.documents)

    def n_tokens(self) -> int:
        return sum(len(d) for d in self.documents)

    def token_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for doc in self.documents:
            for tok in doc:
                counts[tok] = counts.get(tok, 0) + 1
        return counts


@dataclass
class TranslationPairList:
    """Word pairs (source, target), unique by source word."""

    pairs: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for src, tgt in self.pairs:
            if not src or not tgt:
                raise PolylexError(f"empty member in pair ({src!r}, {tgt!r})")
            if src in seen:
                raise PolylexError(f"duplicate source word in pair list: {src!r}")
            seen.add(src)

    def __len__(self) -> int:
        return len(self.pairs)


def iter_decoded_lines(path):
    """Yield decoded lines of a UTF-8 text file, without trailing newlines.

    Raises IngestionError naming the 1-based line number on bad UTF-8.
    """
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                yield raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as exc:
                raise IngestionError(f"{path}: line {lineno}: invalid UTF-8 ({exc})") from exc


def read_corpus(path, source_tag: str | None = None) -> Corpus:
    """Read an already-tokenized corpus file: one document per line."""
    docs = [line.split() for line in iter_decoded_lines(path)]
    return Corpus(docs, source_tag if source_tag is not None else str(path))


def read_raw_corpus(path, source_tag: str | None = None) -> Corpus:
    """Read a raw text file and run `preprocess` on every line."""
    docs = [preprocess(line) for line in iter_decoded_lines(path)]
    return Corpus(docs, source_tag if source_tag is not None else str(path))


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(" ".join(doc))
            fh.write("\n")


def read_pairs(path) -> TranslationPairList:
    """Read a TSV pair file: `source<TAB>target`, `#` comment lines ignored."""
    pairs = []
    for lineno, line in enumerate(iter_decoded_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise IngestionError(f"{path}: line {lineno}: expected `source<TAB>target`")
        pairs.append((parts[0], parts[1]))
    return TranslationPairList(pairs)


def write_pairs(pairs: TranslationPairList, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for src, tgt in pairs.pairs:
            fh.write(f"{src}\t{tgt}\n")


def mix_corpora(a: Corpus, b: Corpus, rng_seed: int) -> Corpus:
    """Pool the documents of two corpora and shuffle them at document level.

    The output is a uniform seeded permutation of the union; the same seed
    always produces the same order.
    """
    if not a.documents or not b.documents:
        raise PolylexError("mix_corpora requires two non-empty corpora")
    docs = [list(d) for d in a.documents] + [list(d) for d in b.documents]
    Random(rng_seed).shuffle(docs)
    tag = f"mix({a.source_tag},{b.source_tag})"
    return Corpus(docs, tag)


def mask_numbers(corpus: Corpus, mask_token: str) -> Corpus:
    """Replace every all-ASCII-digit token with `mask_token`.

    The mask token must not already occur in the corpus; mixed alphanumeric
    tokens are left untouched.
    """
    _check_token(mask_token)
    for doc in corpus.documents:
        if mask_token in doc:
            raise PolylexError(f"mask token {mask_token!r} already occurs in the corpus")
    docs = [
        [mask_token if tok and all(c in _DIGITS for c in tok) else tok for tok in doc]
        for doc in corpus.documents
    ]
    return Corpus(docs, corpus.source_tag)


def _is_borrowed(docs, positions_doc, pos, label, part) -> bool:
    """True when every existing immediate neighbor carries a different,
    non-abstain language label. Single-token documents have no neighbors
    and are never borrowed."""
    doc = docs[positions_doc]
    neighbors = []
    if pos > 0:
        neighbors.append(doc[pos - 1])
    if pos < len(doc) - 1:
        neighbors.append(doc[pos + 1])
    if not neighbors:
        return False
    for nb in neighbors:
        nb_label = part.label_of(nb)
        if nb_label is None or nb_label == part.ABSTAIN or nb_label == label:
            return False
    return True


def loanword_exchange(
    corpus: Corpus,
    pairs: TranslationPairList,
    part,
    rng_seed: int,
) -> Corpus:
    """Frequency-preserving exchange that undoes lexical borrowing.

    For each pair (u, v), an occurrence counts as borrowed when all of its
    immediate neighbors carry the other language's label. Exactly
    m = min(#borrowed(u), #borrowed(v)) borrowed occurrences of each member
    are rewritten to the other member, chosen uniformly by `rng_seed`, so
    every token keeps its global corpus frequency.
    """
    rng = Random(rng_seed)
    docs = [list(d) for d in corpus.documents]

    positions: dict[str, list[tuple[int, int]]] = {}
    for di, doc in enumerate(docs):
        for ti, tok in enumerate(doc):
            positions.setdefault(tok, []).append((di, ti))

    for u, v in pairs.pairs:
        if not positions.get(u) or not positions.get(v):
            missing = u if not positions.get(u) else v
            warnings.warn(f"loanword_exchange: {missing!r} not in corpus, pair ({u}, {v}) skipped")
            continue
        lab_u, lab_v = part.label_of(u), part.label_of(v)
        if lab_u in (None, part.ABSTAIN) or lab_v in (None, part.ABSTAIN):
            warnings.warn(f"loanword_exchange: pair ({u}, {v}) not covered by the partition, skipped")
            continue

        borrowed_u = [(di, ti) for di, ti in positions[u] if _is_borrowed(docs, di, ti, lab_u, part)]
        borrowed_v = [(di, ti) for di, ti in positions[v] if _is_borrowed(docs, di, ti, lab_v, part)]
        m = min(len(borrowed_u), len(borrowed_v))
        if m == 0:
            continue
        picked_u = rng.sample(borrowed_u, m)
        picked_v = rng.sample(borrowed_v, m)
        for di, ti in picked_u:
            docs[di][ti] = v
            positions[u].remove((di, ti))
            positions[v].append((di, ti))
        for di, ti in picked_v:
            docs[di][ti] = u
            positions[v].remove((di, ti))
            positions[u].append((di, ti))

    return Corpus(docs, corpus.source_tag)
