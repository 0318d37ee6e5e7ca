"""Token-level language estimation and per-language frequency bands.

Every vocabulary word is assigned the language of its nearest seed
centroid in the normalized embedding space, or abstains when the best and
second-best centroid similarities are too close to call. Bands slice each
estimated vocabulary by frequency rank: the top 5%, the next 5%, and the
rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .embedding import EmbeddingModel
from .errors import IngestionError, PolylexError

ABSTAIN = "ABSTAIN"
BAND_NAMES = ("0-5", "5-10", "10-100")
DEFAULT_ABSTAIN_THRESHOLD = 0.025


@dataclass
class SeedSet:
    """Per-language seed words; at least two languages, no word twice."""

    by_language: dict[str, list[str]]

    def __post_init__(self):
        if len(self.by_language) < 2:
            raise PolylexError("a seed set needs at least two languages")
        seen: dict[str, str] = {}
        for lang, words in self.by_language.items():
            if lang == ABSTAIN:
                raise PolylexError(f"{ABSTAIN!r} is reserved and cannot name a language")
            if not words:
                raise PolylexError(f"language {lang!r} has no seed words")
            for w in words:
                if w in seen:
                    raise PolylexError(f"seed word {w!r} appears in both {seen[w]!r} and {lang!r}")
                seen[w] = lang

    @property
    def languages(self) -> list[str]:
        return list(self.by_language)


@dataclass
class LanguagePartition:
    """Estimated labels, per-language vocabularies and frequency bands."""

    labels: dict[str, str]                       # word -> language or ABSTAIN
    vocabularies: dict[str, set[str]]            # language -> estimated vocabulary
    bands: dict[str, dict[str, set[str]]]        # language -> band name -> words
    counts: dict[str, int] = field(default_factory=dict)

    ABSTAIN = ABSTAIN

    def label_of(self, word: str) -> str | None:
        return self.labels.get(word)

    @property
    def languages(self) -> list[str]:
        return list(self.vocabularies)


def frequency_bands(vocab_counts: Mapping[str, int], members: set[str]) -> dict[str, set[str]]:
    """Split `members` into 0-5 / 5-10 / 10-100 percent bands by count rank.

    Boundaries use ceilings so even tiny vocabularies populate the top band.
    """
    if not members:
        raise PolylexError("frequency_bands requires a non-empty member set")
    missing = [w for w in members if w not in vocab_counts]
    if missing:
        raise PolylexError(f"no counts available for {missing[:5]}")
    ranked = sorted(members, key=lambda w: (-vocab_counts[w], w))
    n = len(ranked)
    cut1 = math.ceil(0.05 * n)
    cut2 = math.ceil(0.10 * n)
    return {
        "0-5": set(ranked[:cut1]),
        "5-10": set(ranked[cut1:cut2]),
        "10-100": set(ranked[cut2:]),
    }


def estimate_partition(
    model: EmbeddingModel,
    seeds: SeedSet,
    abstain_threshold: float = DEFAULT_ABSTAIN_THRESHOLD,
) -> LanguagePartition:
    """Label every vocabulary word by its nearest seed-language centroid.

    A word abstains when the margin between its best and second-best
    centroid cosine similarities is below `abstain_threshold`; seed words
    always keep their own language.
    """
    vocab = model.vocab
    offenders = [
        w for words in seeds.by_language.values() for w in words if w not in vocab
    ]
    if offenders:
        raise PolylexError(f"seed words missing from the vocabulary: {offenders}")

    unit = model.unit_vocab_vectors()
    langs = seeds.languages
    centroids = np.empty((len(langs), model.dim), dtype=np.float64)
    for li, lang in enumerate(langs):
        ids = [vocab.id_of(w) for w in seeds.by_language[lang]]
        c = unit[ids].astype(np.float64).mean(axis=0)
        norm = np.linalg.norm(c)
        if norm == 0.0:
            raise PolylexError(f"seed centroid of {lang!r} has zero norm")
        centroids[li] = c / norm

    sims = unit.astype(np.float64) @ centroids.T  # |V| x n_langs
    best = np.argmax(sims, axis=1)
    sorted_sims = np.sort(sims, axis=1)
    margin = sorted_sims[:, -1] - (sorted_sims[:, -2] if len(langs) > 1 else 0.0)

    labels: dict[str, str] = {}
    for i, word in enumerate(vocab.words):
        labels[word] = langs[best[i]] if margin[i] >= abstain_threshold else ABSTAIN
    for lang, words in seeds.by_language.items():
        for w in words:
            labels[w] = lang

    counts = {w: vocab.count_of(w) for w in vocab.words}
    vocabularies = {lang: {w for w, l in labels.items() if l == lang} for lang in langs}
    bands = {
        lang: frequency_bands(counts, members) if members else {b: set() for b in BAND_NAMES}
        for lang, members in vocabularies.items()
    }
    return LanguagePartition(labels, vocabularies, bands, counts)


def read_seeds(path) -> SeedSet:
    """Read a TSV seed file: `word<TAB>language_label` per line."""
    from .corpus import iter_decoded_lines

    by_language: dict[str, list[str]] = {}
    for lineno, line in enumerate(iter_decoded_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise IngestionError(f"{path}: line {lineno}: expected `word<TAB>language`")
        by_language.setdefault(parts[1], []).append(parts[0])
    return SeedSet(by_language)


def write_seeds(seeds: SeedSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lang, words in seeds.by_language.items():
            for w in words:
                fh.write(f"{w}\t{lang}\n")


def write_partition(part: LanguagePartition, path) -> None:
    """Write `word<TAB>label<TAB>count<TAB>band`; abstained words get band '-'."""
    band_of: dict[str, str] = {}
    for lang, by_band in part.bands.items():
        for band, words in by_band.items():
            for w in words:
                band_of[w] = band
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(part.labels):
            label = part.labels[word]
            count = part.counts.get(word, 0)
            fh.write(f"{word}\t{label}\t{count}\t{band_of.get(word, '-')}\n")


def read_partition(path) -> LanguagePartition:
    from .corpus import iter_decoded_lines

    labels: dict[str, str] = {}
    counts: dict[str, int] = {}
    vocabularies: dict[str, set[str]] = {}
    bands: dict[str, dict[str, set[str]]] = {}
    for lineno, line in enumerate(iter_decoded_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise IngestionError(f"{path}: line {lineno}: expected 4 tab-separated fields")
        word, label, count, band = parts
        labels[word] = label
        counts[word] = int(count)
        if label != ABSTAIN:
            vocabularies.setdefault(label, set()).add(word)
            if band not in BAND_NAMES:
                raise IngestionError(f"{path}: line {lineno}: unknown band {band!r}")
            bands.setdefault(label, {b: set() for b in BAND_NAMES})[band].add(word)
    return LanguagePartition(labels, vocabularies, bands, counts)
