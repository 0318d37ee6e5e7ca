"""Cross-lingual document operations.

Document embeddings are means of unit-normalized word vectors. Word-for-
word document translation keeps target-language tokens as they are and
replaces everything else with a mutually-nearest translation candidate,
which counters the hubness of naive nearest-neighbor picks. Seed-set
expansion walks a document pool by ever-increasing cosine distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from random import Random
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document
from .embedding import EmbeddingModel, embed_word
from .errors import (
    PolylexError,
    PoolExhaustedError,
    UnembeddableTokenError,
    UntranslatableDocumentError,
)
from .langid import LanguagePartition
from .lexicon import DEFAULT_TARGET_MIN_FREQ, Direction, EvalReport, top_translations


class SelectionPolicy(enum.Enum):
    RANDOM = "random"
    TOP = "top"


@dataclass
class DocEmbedding:
    vector: np.ndarray
    doc_id: int | None = None
    n_skipped_tokens: int = 0


@dataclass
class SamplePool:
    """Documents with precomputed embeddings, addressable by id (row)."""

    documents: list[Document]
    embeddings: np.ndarray  # n_docs x dim, one row per document

    def __post_init__(self):
        if len(self.documents) != self.embeddings.shape[0]:
            raise PolylexError("pool documents and embeddings differ in length")

    def __len__(self) -> int:
        return len(self.documents)

    @classmethod
    def build(cls, model: EmbeddingModel, documents: Sequence[Document]) -> "SamplePool":
        rows = []
        for i, doc in enumerate(documents):
            try:
                rows.append(document_embedding(model, doc, doc_id=i).vector)
            except PolylexError as exc:
                raise PolylexError(f"pool document {i} is not embeddable: {exc}") from exc
        return cls(list(documents), np.vstack(rows))


def _unit(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise PolylexError("zero-norm vector cannot be normalized")
    return v / n


def document_embedding(model: EmbeddingModel, doc: Document, doc_id: int | None = None) -> DocEmbedding:
    """Mean of the unit-normalized word vectors of the embeddable tokens."""
    vectors = []
    skipped = 0
    for tok in doc:
        try:
            vectors.append(_unit(embed_word(model, tok)))
        except (UnembeddableTokenError, PolylexError):
            skipped += 1
    if not vectors:
        raise PolylexError(f"document has no embeddable token: {doc!r}")
    return DocEmbedding(np.mean(vectors, axis=0), doc_id, skipped)


def mutual_candidates(
    model: EmbeddingModel,
    part: LanguagePartition,
    word: str,
    n: int,
    direction: Direction,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    strict: bool = True,
) -> list[str]:
    """Forward candidates whose own top-N back-translations contain `word`.

    Returned in ascending forward-distance order; an empty list is a valid
    result (every candidate was a non-reciprocating hub).
    """
    forward = top_translations(model, part, word, n, direction, target_min_freq, strict)
    reverse = direction.reverse()
    kept = []
    for nb in forward:
        try:
            back = top_translations(model, part, nb.word, n, reverse, target_min_freq)
        except PolylexError:
            continue
        if any(b.word == word for b in back):
            kept.append(nb.word)
    return kept


def translate_embedding(
    model: EmbeddingModel,
    part: LanguagePartition,
    doc: Document,
    n: int,
    direction: Direction,
    policy: SelectionPolicy,
    rng_seed: int = 1,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    candidate_cache: dict[str, list[str]] | None = None,
) -> DocEmbedding:
    """Embed a source document as if written in the target language.

    Tokens already labeled with the target language keep their own
    normalized vector; every other token contributes the vector of one
    mutual translation candidate (uniformly random or the closest one,
    by policy), or nothing when no candidate is mutual.
    """
    if not doc:
        raise PolylexError("cannot translate an empty document")
    rng = Random(rng_seed)
    collected = []
    skipped = 0
    for tok in doc:
        if part.label_of(tok) == direction.target:
            collected.append(_unit(embed_word(model, tok)))
            continue
        if candidate_cache is not None and tok in candidate_cache:
            cands = candidate_cache[tok]
        else:
            try:
                cands = mutual_candidates(
                    model, part, tok, n, direction, target_min_freq, strict=False
                )
            except (PolylexError, UnembeddableTokenError):
                cands = []
            if candidate_cache is not None:
                candidate_cache[tok] = cands
        if not cands:
            skipped += 1
            continue
        chosen = cands[0] if policy is SelectionPolicy.TOP else rng.choice(cands)
        collected.append(_unit(embed_word(model, chosen)))
    if not collected:
        raise UntranslatableDocumentError(f"untranslatable document: {doc!r}")
    return DocEmbedding(np.mean(collected, axis=0), None, skipped)


def nn_sample(
    seed_embeddings: np.ndarray,
    pool: SamplePool,
    size: int,
    seed_docs: Sequence[Document] | None = None,
) -> list[int]:
    """Expand a seed set with `size` fresh pool neighbors per seed.

    For each seed, in input order, repeatedly fetch the nearest pool
    document strictly farther than the last fetched distance (equal
    distances ordered by pool id) and add it when it is not already in the
    expansion or the seed set. Returns pool ids in addition order.
    """
    seed_embeddings = np.atleast_2d(np.asarray(seed_embeddings, dtype=np.float64))
    n_seeds = seed_embeddings.shape[0]
    if size < 1:
        raise PolylexError("size must be >= 1")
    if len(pool) < n_seeds * size:
        raise PolylexError(
            f"pool of {len(pool)} documents cannot supply {n_seeds} seeds x {size} additions"
        )

    seed_keys = {tuple(d) for d in seed_docs} if seed_docs is not None else set()
    pool_unit = pool.embeddings.astype(np.float64)
    norms = np.linalg.norm(pool_unit, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    pool_unit = pool_unit / norms

    expansion: list[int] = []
    chosen = set()
    for si in range(n_seeds):
        q = _unit(seed_embeddings[si])
        dists = 1.0 - pool_unit @ q
        order = np.lexsort((np.arange(len(pool)), dists))
        count = 0
        dist = 0.0
        pos = 0
        while count < size:
            # nearest neighbor strictly farther than the last fetched distance
            while pos < len(order) and dists[order[pos]] <= dist:
                pos += 1
            if pos >= len(order):
                raise PoolExhaustedError(
                    f"pool exhausted after {count} additions for seed {si}"
                )
            neighbor = int(order[pos])
            dist = float(dists[neighbor])
            pos += 1
            if neighbor in chosen or tuple(pool.documents[neighbor]) in seed_keys:
                continue
            expansion.append(neighbor)
            chosen.add(neighbor)
            count += 1
    return expansion


def rank_of_gold(pool_unit: np.ndarray, query: np.ndarray, gold_id: int) -> int:
    """0-based rank of the gold pool row by ascending cosine distance,
    ties broken by pool id."""
    q = _unit(query)
    dists = 1.0 - pool_unit @ q
    gd = dists[gold_id]
    ahead = int(np.sum(dists < gd)) + int(np.sum((dists == gd) & (np.arange(len(dists)) < gold_id)))
    return ahead


def retrieval_eval(
    model: EmbeddingModel,
    part: LanguagePartition,
    source_docs: Sequence[Document],
    target_pool: SamplePool,
    gold: Mapping[int, int],
    n: int,
    direction: Direction,
    policy: SelectionPolicy,
    k_values: Sequence[int] = (1, 5, 10),
    rng_seed: int = 1,
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ,
    dataset: str = "",
) -> EvalReport:
    """Translate each source document and rank the pool around it.

    p@K is the fraction of translatable sources whose true counterpart
    lands in the top K; untranslatable sources are excluded from the
    denominator and counted as skipped.
    """
    for sid in gold:
        if not (0 <= gold[sid] < len(target_pool)):
            raise PolylexError(f"gold id {gold[sid]} for source {sid} is missing from the pool")
    missing = [i for i in range(len(source_docs)) if i not in gold]
    if missing:
        raise PolylexError(f"gold map lacks source ids {missing[:5]}")

    pool_unit = target_pool.embeddings.astype(np.float64)
    norms = np.linalg.norm(pool_unit, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    pool_unit = pool_unit / norms

    cache: dict[str, list[str]] = {}
    ranks = []
    skipped = 0
    for sid, doc in enumerate(source_docs):
        try:
            emb = translate_embedding(
                model, part, doc, n, direction, policy,
                rng_seed=rng_seed + sid, target_min_freq=target_min_freq,
                candidate_cache=cache,
            )
        except (UntranslatableDocumentError, PolylexError):
            skipped += 1
            continue
        ranks.append(rank_of_gold(pool_unit, emb.vector, gold[sid]))
    if not ranks:
        raise PolylexError("every source document was untranslatable")

    p_at = {k: sum(1 for r in ranks if r < k) / len(ranks) for k in sorted(k_values)}
    return EvalReport(
        direction=str(direction),
        dataset=dataset,
        constraints={
            "n": n,
            "policy": policy.value,
            "target_min_freq": target_min_freq,
            "pool_size": len(target_pool),
            "rng_seed": rng_seed,
        },
        n_evaluated=len(ranks),
        n_skipped=skipped,
        p_at=p_at,
    )


def write_doc_embeddings(embeddings: np.ndarray, path) -> None:
    """Text matrix dump, one whitespace-separated row per document."""
    arr = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(" ".join(repr(float(x)) for x in row))
            fh.write("\n")


def read_doc_embeddings(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(x) for x in line.split()])
    if not rows:
        raise PolylexError(f"{path}: no embedding rows")
    return np.array(rows, dtype=np.float64)
