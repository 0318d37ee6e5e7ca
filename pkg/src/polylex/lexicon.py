"""Constrained nearest-neighbor lexicon mining and p@K evaluation.

The translation scheme never aligns anything: a source word's candidates
are simply its nearest vocabulary neighbors restricted to the estimated
target-language vocabulary, optionally with a corpus-frequency floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Mapping, Sequence

from .embedding import EmbeddingModel, Neighbor, embed_word, nearest_neighbors
from .errors import IngestionError, PolylexError, UnembeddableTokenError
from .langid import LanguagePartition

DEFAULT_SAMPLE_SIZE = 500
DEFAULT_TARGET_MIN_FREQ = 100
DEFAULT_N = 10
DEFAULT_K_VALUES = (1, 5, 10)


@dataclass(frozen=True)
class Direction:
    """Translation direction between two partition languages."""

    source: str
    target: str

    def __post_init__(self):
        if self.source == self.target:
            raise PolylexError("source and target language must differ")

    def reverse(self) -> "Direction":
        return Direction(self.target, self.source)

    def __str__(self) -> str:
        return f"{self.source}:{self.target}"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        parts = text.split(":")
        if len(parts) != 2 or not all(parts):
            raise PolylexError(f"direction must look like 'src:tgt', got {text!r}")
        return cls(parts[0], parts[1])


@dataclass
class Lexicon:
    """Ranked translation candidates per source word."""

    entries: dict[str, list[Neighbor]]
    direction: Direction
    constraints: dict
    diagnostics: dict[str, str] = field(default_factory=dict)


@dataclass
class EvalReport:
    direction: str
    dataset: str
    constraints: dict
    n_evaluated: int
    n_skipped: int
    p_at: dict[int, float]

    def to_json(self) -> str:
        payload = {
            "direction": self.direction,
            "dataset": self.dataset,
            "constraints": self.constraints,
            "n_evaluated": self.n_evaluated,
            "n_skipped": self.n_skipped,
            "p_at": {str(k): v for k, v in self.p_at.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        d = json.loads(text)
        return cls(
            direction=d["direction"],
            dataset=d["dataset"],
            constraints=d["constraints"],
            n_evaluated=d["n_evaluated"],
            n_skipped=d["n_skipped"],
            p_at={int(k): v for k, v in d["p_at"].items()},
        )


def _check_direction(part: LanguagePartition, direction: Direction) -> None:
    for lang in (direction.source, direction.target):
        if lang not in part.vocabularies:
            raise PolylexError(f"language {lang!r} is not present in the partition")


def constrained_target_set(
    part: LanguagePartition, direction: Direction, target_min_freq: int
) -> set[str]:
    _check_direction(part, direction)
    return {
        w
        for w in part.vocabularies[direction.target]
        if part.counts.get(w, 0) >= target_min_freq
    }


def top_translations(
    model: EmbeddingModel,
    part: LanguagePartition,
    word: str,
    n: int,
    direction: Direction,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    strict: bool = True,
) -> list[Neighbor]:
    """N nearest constrained neighbors of `word` in the target vocabulary.

    Strict mode requires the word to belong to the estimated source
    vocabulary; lenient mode embeds any string through its subwords, which
    Algorithm-style document translation needs for unlabeled tokens.
    """
    _check_direction(part, direction)
    if strict and word not in part.vocabularies[direction.source]:
        raise PolylexError(
            f"{word!r} is not in the estimated {direction.source!r} vocabulary (strict mode)"
        )
    allow = constrained_target_set(part, direction, target_min_freq)
    allow.discard(word)
    if not allow:
        raise PolylexError(
            f"no {direction.target!r} word meets the frequency floor {target_min_freq}"
        )
    query = embed_word(model, word)
    return nearest_neighbors(model, query, n, allow)


def translate_word(
    model: EmbeddingModel,
    part: LanguagePartition,
    word: str,
    direction: Direction,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    strict: bool = True,
) -> str:
    """Single-word translation: the closest constrained neighbor."""
    return top_translations(model, part, word, 1, direction, target_min_freq, strict)[0].word


def mine_lexicon(
    model: EmbeddingModel,
    part: LanguagePartition,
    direction: Direction,
    source_band: str = "0-5",
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    n: int = DEFAULT_N,
    rng_seed: int = 1,
) -> Lexicon:
    """Sample source words from a frequency band and rank their candidates.

    Per-word failures become empty entries with a diagnostic instead of
    failing the run.
    """
    _check_direction(part, direction)
    band = part.bands.get(direction.source, {}).get(source_band)
    if not band:
        raise PolylexError(f"band {source_band!r} of {direction.source!r} is empty")
    ordered = sorted(band)
    take = min(sample_size, len(ordered))
    sampled = Random(rng_seed).sample(ordered, take)

    entries: dict[str, list[Neighbor]] = {}
    diagnostics: dict[str, str] = {}
    for word in sampled:
        try:
            entries[word] = top_translations(model, part, word, n, direction, target_min_freq)
        except (PolylexError, UnembeddableTokenError) as exc:
            entries[word] = []
            diagnostics[word] = str(exc)
    constraints = {
        "source_band": source_band,
        "sample_size": sample_size,
        "target_min_freq": target_min_freq,
        "n": n,
        "rng_seed": rng_seed,
    }
    return Lexicon(entries, direction, constraints, diagnostics)


def evaluate_pk(
    lexicon: Lexicon,
    gold: Mapping[str, set[str]],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    dataset: str = "",
) -> EvalReport:
    """Top-K accuracy over the gold-covered sources of a lexicon.

    Sources absent from the gold dictionary are excluded from the
    denominator and reported as skipped.
    """
    n_limit = lexicon.constraints.get("n")
    for k in k_values:
        if k < 1 or (n_limit is not None and k > n_limit):
            raise PolylexError(f"K={k} outside the mined candidate depth {n_limit}")
    covered = [(w, cands) for w, cands in lexicon.entries.items() if w in gold]
    if not covered:
        raise PolylexError("no lexicon source word is covered by the gold dictionary")
    p_at: dict[int, float] = {}
    for k in sorted(k_values):
        hits = sum(
            1
            for w, cands in covered
            if any(nb.word in gold[w] for nb in cands[:k])
        )
        p_at[k] = hits / len(covered)
    return EvalReport(
        direction=str(lexicon.direction),
        dataset=dataset,
        constraints=dict(lexicon.constraints),
        n_evaluated=len(covered),
        n_skipped=len(lexicon.entries) - len(covered),
        p_at=p_at,
    )


def write_lexicon(lexicon: Lexicon, path) -> None:
    """Write `source<TAB>rank<TAB>target<TAB>distance` rows, rank 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        for source, cands in lexicon.entries.items():
            for rank, nb in enumerate(cands, start=1):
                fh.write(f"{source}\t{rank}\t{nb.word}\t{nb.distance!r}\n")


def read_lexicon(path, direction: Direction, constraints: dict | None = None) -> Lexicon:
    from .corpus import iter_decoded_lines

    entries: dict[str, list[Neighbor]] = {}
    for lineno, line in enumerate(iter_decoded_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise IngestionError(f"{path}: line {lineno}: expected 4 tab-separated fields")
        source, rank, target, distance = parts
        entries.setdefault(source, []).append(Neighbor(target, float(distance)))
    for cands in entries.values():
        cands.sort(key=lambda nb: nb.distance)
    return Lexicon(entries, direction, constraints or {})


def read_gold(path) -> dict[str, set[str]]:
    """Read a whitespace-separated `source target` dictionary, one pair per
    line; repeated sources accumulate alternatives."""
    from .corpus import iter_decoded_lines

    gold: dict[str, set[str]] = {}
    for lineno, line in enumerate(iter_decoded_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise IngestionError(f"{path}: line {lineno}: expected `source target`")
        gold.setdefault(parts[0], set()).add(parts[1])
    return gold
