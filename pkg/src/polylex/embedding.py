"""Subword skip-gram embeddings and exact cosine nearest-neighbor queries.

One skip-gram model with negative sampling is trained on the whole mixed
corpus. Every word is represented during training (and at query time) as
the arithmetic mean of its own vector and the bucket vectors of the
character n-grams of "<word>". Negatives follow the unigram distribution
raised to the 3/4 power, the per-position context radius is drawn uniformly
from [1, window], frequent words are subsampled, and the learning rate
decays linearly to zero over the scheduled number of token visits.
"""

from __future__ import annotations

import logging
import struct
import threading
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _sgns
from .corpus import Corpus
from .errors import EmptyVocabularyError, PolylexError, UnembeddableTokenError

log = logging.getLogger(__name__)

SUBWORD_MAGIC = b"PLXS"
SUBWORD_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass
class Hyperparams:
    """Training configuration; defaults follow the common fastText setup."""

    dim: int = 100
    min_n: int = 2
    max_n: int = 4
    epochs: int = 5
    window: int = 5
    negatives: int = 5
    min_count: int = 5
    learning_rate: float = 0.05
    bucket_count: int = 2_000_000
    subsample: float = 1e-4  # 0 disables frequent-word subsampling
    rng_seed: int = 1

    def __post_init__(self):
        if self.dim <= 0:
            raise PolylexError("dim must be positive")
        if not (0 < self.min_n <= self.max_n):
            raise PolylexError("need 0 < min_n <= max_n")
        for name in ("epochs", "window", "negatives", "min_count", "bucket_count"):
            if getattr(self, name) < 1:
                raise PolylexError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise PolylexError("learning_rate must be positive")
        if self.subsample < 0:
            raise PolylexError("subsample must be >= 0")


@dataclass
class Vocab:
    """Dense-id vocabulary ordered by descending count, ties by word."""

    words: list[str]
    counts: np.ndarray  # int64, aligned with words
    total_tokens: int
    word2id: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.word2id:
            self.word2id = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word2id

    def id_of(self, word: str) -> int:
        return self.word2id[word]

    def count_of(self, word: str) -> int:
        return int(self.counts[self.word2id[word]])


class Neighbor(NamedTuple):
    word: str
    distance: float


def build_vocab(corpus: Corpus, h: Hyperparams) -> Vocab:
    """Count tokens and keep those with frequency >= min_count."""
    counts = corpus.token_counts()
    kept = sorted(
        ((w, c) for w, c in counts.items() if c >= h.min_count),
        key=lambda wc: (-wc[1], wc[0]),
    )
    if not kept:
        raise EmptyVocabularyError(
            f"no token reaches min_count={h.min_count} in corpus {corpus.source_tag!r}"
        )
    words = [w for w, _ in kept]
    arr = np.array([c for _, c in kept], dtype=np.int64)
    return Vocab(words, arr, total_tokens=corpus.n_tokens())


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _U64_MASK
    return h


def char_ngrams(word: str, min_n: int, max_n: int) -> list[str]:
    """All character n-grams of "<word>", lengths min_n..max_n, in position
    order; repeated n-grams appear once per occurrence."""
    s = f"<{word}>"
    out = []
    for n in range(min_n, max_n + 1):
        for i in range(len(s) - n + 1):
            out.append(s[i : i + n])
    return out


def ngram_bucket_ids(word: str, min_n: int, max_n: int, bucket_count: int) -> list[int]:
    return [
        fnv1a_64(ng.encode("utf-8")) % bucket_count
        for ng in char_ngrams(word, min_n, max_n)
    ]


def _build_ngram_csr(words: Sequence[str], h: Hyperparams):
    indptr = np.zeros(len(words) + 1, dtype=np.int64)
    all_ids: list[int] = []
    for i, w in enumerate(words):
        ids = ngram_bucket_ids(w, h.min_n, h.max_n, h.bucket_count)
        all_ids.extend(ids)
        indptr[i + 1] = len(all_ids)
    return indptr, np.array(all_ids, dtype=np.int32)


@dataclass
class EmbeddingModel:
    """Trained word and subword vectors plus the query-time unit cache."""

    vocab: Vocab
    word_vectors: np.ndarray                 # |V| x dim float32
    subword_vectors: np.ndarray | None       # bucket_count x dim float32
    hyperparams: Hyperparams
    _unit_vocab: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.word_vectors.shape[1]

    def has_subwords(self) -> bool:
        return self.subword_vectors is not None

    def unit_vocab_vectors(self) -> np.ndarray:
        """Composed vectors of all vocabulary words, L2-normalized once."""
        if self._unit_vocab is None:
            if self.has_subwords():
                indptr, ids = _build_ngram_csr(self.vocab.words, self.hyperparams)
                sub = self.subword_vectors
            else:
                indptr = np.zeros(len(self.vocab) + 1, dtype=np.int64)
                ids = np.zeros(0, dtype=np.int32)
                sub = np.zeros((0, self.dim), dtype=np.float32)
            out = np.empty_like(self.word_vectors)
            _sgns.compose_all(self.word_vectors, sub, indptr, ids, out)
            norms = np.linalg.norm(out, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            self._unit_vocab = out / norms
        return self._unit_vocab

    def invalidate_cache(self) -> None:
        self._unit_vocab = None


def embed_word(model: EmbeddingModel, word: str) -> np.ndarray:
    """Raw (unnormalized) vector of a word.

    In-vocabulary words combine their word row with their subword rows;
    out-of-vocabulary words fall back to subword rows alone.
    """
    h = model.hyperparams
    in_vocab = word in model.vocab
    if model.has_subwords():
        ids = ngram_bucket_ids(word, h.min_n, h.max_n, h.bucket_count)
    else:
        ids = []
    if in_vocab:
        rows = [model.word_vectors[model.vocab.id_of(word)]]
        rows.extend(model.subword_vectors[i] for i in ids)
        return np.mean(rows, axis=0, dtype=np.float32)
    if not ids:
        raise UnembeddableTokenError(f"unembeddable token: {word!r}")
    return np.mean([model.subword_vectors[i] for i in ids], axis=0, dtype=np.float32)


def cosine_distance(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise PolylexError("cosine distance is undefined for zero-norm vectors")
    return float(1.0 - np.dot(u, v) / (nu * nv))


def nearest_neighbors(
    model: EmbeddingModel,
    query: np.ndarray,
    k: int,
    allow: Iterable[str],
) -> list[Neighbor]:
    """Exhaustive exact top-k by cosine distance over the allowed words.

    Results are sorted by ascending distance, ties broken by ascending
    vocabulary id.
    """
    if k < 1:
        raise PolylexError("k must be >= 1")
    allow = list(allow)
    if not allow:
        raise PolylexError("nearest_neighbors requires a non-empty allow set")
    missing = [w for w in allow if w not in model.vocab]
    if missing:
        raise PolylexError(f"allow set contains out-of-vocabulary words: {missing[:5]}")

    q = np.asarray(query, dtype=np.float64)
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise PolylexError("cannot rank neighbors of a zero-norm query")
    q = q / qn

    ids = np.array(sorted(model.vocab.id_of(w) for w in allow), dtype=np.int64)
    unit = model.unit_vocab_vectors()
    dists = 1.0 - unit[ids].astype(np.float64) @ q
    order = np.lexsort((ids, dists))[: min(k, len(ids))]
    words = model.vocab.words
    return [Neighbor(words[ids[i]], float(dists[i])) for i in order]


def _int_corpus(corpus: Corpus, vocab: Vocab):
    """Documents as dense-id arrays; out-of-vocabulary tokens are dropped."""
    w2i = vocab.word2id
    tokens: list[int] = []
    offsets = [0]
    for doc in corpus.documents:
        tokens.extend(w2i[t] for t in doc if t in w2i)
        offsets.append(len(tokens))
    return np.array(tokens, dtype=np.int32), np.array(offsets, dtype=np.int64)


def _keep_probs(vocab: Vocab, subsample: float) -> np.ndarray:
    keep = np.ones(len(vocab), dtype=np.float64)
    if subsample <= 0:
        return keep
    total = float(vocab.counts.sum())
    freq = vocab.counts / total
    with np.errstate(divide="ignore"):
        p = np.sqrt(subsample / freq) + subsample / freq
    return np.minimum(keep, p)


def _negative_cdf(vocab: Vocab) -> np.ndarray:
    weights = vocab.counts.astype(np.float64) ** 0.75
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def train(corpus: Corpus, h: Hyperparams, n_workers: int = 1) -> EmbeddingModel:
    """Train the subword skip-gram model.

    With n_workers == 1 the run is bit-reproducible for a fixed seed;
    more workers apply asynchronous updates to the shared matrices and
    are only qualitatively reproducible.
    """
    if corpus.n_tokens() < h.window + 1:
        raise PolylexError(
            f"corpus has {corpus.n_tokens()} tokens; need at least window+1 = {h.window + 1}"
        )
    vocab = build_vocab(corpus, h)
    tokens, offsets = _int_corpus(corpus, vocab)
    if tokens.size == 0:
        raise EmptyVocabularyError("no in-vocabulary tokens to train on")

    indptr, ng_ids = _build_ngram_csr(vocab.words, h)
    keep_prob = _keep_probs(vocab, h.subsample)
    neg_cdf = _negative_cdf(vocab)

    rng = np.random.default_rng(h.rng_seed)
    scale = np.float32(1.0 / h.dim)  # uniform(-0.5/dim, 0.5/dim)
    word_in = (rng.random((len(vocab), h.dim), dtype=np.float32) - np.float32(0.5)) * scale
    sub_in = (rng.random((h.bucket_count, h.dim), dtype=np.float32) - np.float32(0.5)) * scale
    word_out = np.zeros((len(vocab), h.dim), dtype=np.float32)

    total_scheduled = float(h.epochs) * float(tokens.size)
    progress = np.zeros(1, dtype=np.int64)
    n_docs = len(corpus.documents)
    n_workers = max(1, int(n_workers))
    states = [_sgns.seed_state(h.rng_seed, w) for w in range(n_workers)]

    for epoch in range(h.epochs):
        if n_workers == 1:
            _sgns.train_shard(
                tokens, offsets, 0, n_docs, word_in, sub_in, word_out,
                indptr, ng_ids, keep_prob, neg_cdf, h.window, h.negatives,
                h.learning_rate, total_scheduled, progress, states[0],
            )
        else:
            bounds = np.linspace(0, n_docs, n_workers + 1, dtype=np.int64)
            threads = [
                threading.Thread(
                    target=_sgns.train_shard,
                    args=(
                        tokens, offsets, int(bounds[w]), int(bounds[w + 1]),
                        word_in, sub_in, word_out, indptr, ng_ids, keep_prob,
                        neg_cdf, h.window, h.negatives, h.learning_rate,
                        total_scheduled, progress, states[w],
                    ),
                )
                for w in range(n_workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        for name, mat in (("word_in", word_in), ("sub_in", sub_in), ("word_out", word_out)):
            if not np.isfinite(mat).all():
                raise PolylexError(f"non-finite values in {name} after epoch {epoch + 1}")
        log.debug("epoch %d/%d done (%d token visits)", epoch + 1, h.epochs, progress[0])

    return EmbeddingModel(vocab, word_in, sub_in, h)


def save_text_model(model: EmbeddingModel, path) -> None:
    """Write `<vocab_size> <dim>` then one `word v1 .. v_dim` line per word."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.vocab)} {model.dim}\n")
        for i, word in enumerate(model.vocab.words):
            row = " ".join(repr(float(x)) for x in model.word_vectors[i])
            fh.write(f"{word} {row}\n")


def save_subwords(model: EmbeddingModel, path) -> None:
    if not model.has_subwords():
        raise PolylexError("model has no subword vectors to save")
    h = model.hyperparams
    with open(path, "wb") as fh:
        fh.write(SUBWORD_MAGIC)
        fh.write(struct.pack("<B", SUBWORD_VERSION))
        fh.write(struct.pack("<IIII", h.bucket_count, model.dim, h.min_n, h.max_n))
        model.subword_vectors.astype("<f4").tofile(fh)


def load_model(
    vec_path,
    subword_path=None,
    counts: dict[str, int] | None = None,
    hyperparams: Hyperparams | None = None,
) -> EmbeddingModel:
    """Load a text model, optionally with its subword sidecar.

    Without the sidecar, embed_word falls back to the word row alone and
    out-of-vocabulary queries raise. `counts` supplies corpus frequencies
    when they are known (the text format does not carry them).
    """
    with open(vec_path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise PolylexError(f"{vec_path}: malformed header, expected '<vocab_size> <dim>'")
        n_words, dim = int(header[0]), int(header[1])
        words: list[str] = []
        vecs = np.empty((n_words, dim), dtype=np.float32)
        for i in range(n_words):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise PolylexError(f"{vec_path}: row {i} has {len(parts) - 1} values, expected {dim}")
            words.append(parts[0])
            vecs[i] = np.array(parts[1:], dtype=np.float64).astype(np.float32)

    subword = None
    h = hyperparams
    if subword_path is not None:
        with open(subword_path, "rb") as fh:
            magic = fh.read(4)
            if magic != SUBWORD_MAGIC:
                raise PolylexError(f"{subword_path}: bad magic {magic!r}")
            (version,) = struct.unpack("<B", fh.read(1))
            if version != SUBWORD_VERSION:
                raise PolylexError(f"{subword_path}: unsupported version {version}")
            bucket_count, sdim, min_n, max_n = struct.unpack("<IIII", fh.read(16))
            if sdim != dim:
                raise PolylexError(f"{subword_path}: dim {sdim} does not match model dim {dim}")
            subword = np.fromfile(fh, dtype="<f4", count=bucket_count * dim)
            if subword.size != bucket_count * dim:
                raise PolylexError(f"{subword_path}: truncated subword table")
            subword = subword.reshape(bucket_count, dim)
        if h is None:
            h = Hyperparams(dim=dim, min_n=min_n, max_n=max_n, bucket_count=bucket_count)
    elif h is None:
        h = Hyperparams(dim=dim)

    counts = counts or {}
    arr = np.array([counts.get(w, 0) for w in words], dtype=np.int64)
    vocab = Vocab(words, arr, total_tokens=int(arr.sum()))
    return EmbeddingModel(vocab, vecs, subword, h)
