"""Loanword analysis, ablation pipelines and synthetic corpus generation.

The Loan Word Index of a word is the fraction of its immediate-neighbor
adjacencies that cross language labels. Ablations retrain on a transformed
corpus and re-check exactly the baseline's successful top-1 translations,
isolating what the removed signal contributed. The synthetic generator
plants a known lexicon inside a two-language topical corpus so every
pipeline stage can be scored against ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Corpus, Document, TranslationPairList, loanword_exchange, mask_numbers, mix_corpora
from .embedding import EmbeddingModel, Hyperparams, train
from .errors import PolylexError
from .langid import ABSTAIN, LanguagePartition, SeedSet, estimate_partition
from .lexicon import (
    DEFAULT_N,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_TARGET_MIN_FREQ,
    Direction,
    EvalReport,
    Lexicon,
    evaluate_pk,
    mine_lexicon,
    top_translations,
)

DEFAULT_MASK_TOKEN = "xnumx"


@dataclass
class LWIRecord:
    word: str
    n_borrowed: int
    n_not_borrowed: int
    lwi: float | None  # None when no adjacency could be counted

    def defined(self) -> bool:
        return self.lwi is not None


def adjacency_counts(
    corpus: Corpus,
    part: LanguagePartition,
    both_neighbors: bool = False,
) -> dict[str, tuple[int, int]]:
    """(borrowed, not_borrowed) adjacency counts for every labeled word.

    Default mode counts each existing immediate neighbor separately;
    `both_neighbors` counts whole occurrences instead, and only when every
    existing neighbor agrees on the verdict. Abstained neighbors count in
    neither bucket, abstained words are not counted at all.
    """
    counts: dict[str, list[int]] = {}
    labels = part.labels
    for doc in corpus.documents:
        n = len(doc)
        for i, tok in enumerate(doc):
            lab = labels.get(tok)
            if lab is None or lab == ABSTAIN:
                continue
            neighbor_labels = []
            if i > 0:
                neighbor_labels.append(labels.get(doc[i - 1]))
            if i < n - 1:
                neighbor_labels.append(labels.get(doc[i + 1]))
            informative = [
                nl for nl in neighbor_labels if nl is not None and nl != ABSTAIN
            ]
            if not informative:
                continue
            entry = counts.setdefault(tok, [0, 0])
            if both_neighbors:
                if all(nl != lab for nl in informative):
                    entry[0] += 1
                elif all(nl == lab for nl in informative):
                    entry[1] += 1
            else:
                for nl in informative:
                    if nl != lab:
                        entry[0] += 1
                    else:
                        entry[1] += 1
    return {w: (b, nb) for w, (b, nb) in counts.items()}


def lwi(
    word: str,
    corpus: Corpus,
    part: LanguagePartition,
    both_neighbors: bool = False,
    _table: dict[str, tuple[int, int]] | None = None,
) -> LWIRecord:
    """Loan Word Index of one word: borrowed / (borrowed + not borrowed)."""
    lab = part.label_of(word)
    if lab is None or lab == ABSTAIN:
        raise PolylexError(f"{word!r} carries no language label")
    table = _table if _table is not None else adjacency_counts(corpus, part, both_neighbors)
    if word not in table:
        found = any(word in doc for doc in corpus.documents)
        if not found:
            raise PolylexError(f"{word!r} does not occur in the corpus")
        return LWIRecord(word, 0, 0, None)
    b, nb = table[word]
    return LWIRecord(word, b, nb, b / (b + nb))


def pair_lwi(
    u: str,
    v: str,
    corpus: Corpus,
    part: LanguagePartition,
    both_neighbors: bool = False,
) -> float | None:
    """Maximum of the two members' indices; None when either is undefined."""
    table = adjacency_counts(corpus, part, both_neighbors)
    ru = lwi(u, corpus, part, both_neighbors, _table=table)
    rv = lwi(v, corpus, part, both_neighbors, _table=table)
    if ru.lwi is None or rv.lwi is None:
        return None
    return max(ru.lwi, rv.lwi)


def write_lwi_report(corpus: Corpus, part: LanguagePartition, path, both_neighbors: bool = False) -> None:
    """TSV `word<TAB>label<TAB>n_borrowed<TAB>n_not_borrowed<TAB>lwi`."""
    table = adjacency_counts(corpus, part, both_neighbors)
    with open(path, "w", encoding="utf-8") as fh:
        for word in sorted(table):
            b, nb = table[word]
            value = b / (b + nb)
            fh.write(f"{word}\t{part.labels[word]}\t{b}\t{nb}\t{value!r}\n")


# ---------------------------------------------------------------------------
# Synthetic corpus generation


@dataclass
class SyntheticSpec:
    """Recipe for a two-language corpus with a planted lexicon.

    The alphabets are disjoint (distinct character inventories) except for
    the shared numeral tokens. Each language contributes one document per
    index; documents with equal index share a topic, which the returned id
    map records. `topic_scramble_seed` relabels which word slice the second
    language's topics draw from, which breaks cross-language topical
    cohesion while keeping every word's marginal frequency.
    """

    alphabet_sizes: tuple[int, int] = (2000, 2000)
    language_names: tuple[str, str] = ("alpha", "beta")
    n_topics: int = 20
    docs_per_language: int = 10_000
    mean_doc_length: float = 12.0  # Poisson, clipped to >= 2
    n_pairs: int = 150
    borrowing_rate: float = 0.15
    numeral_rate: float = 0.02
    rng_seed: int = 1
    stopword_count: int = 15
    stopword_rate: float = 0.15
    n_seed_words: int = 20
    topic_scramble_seed: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.borrowing_rate <= 1.0):
            raise PolylexError("borrowing_rate must be in [0, 1]")
        if not (0.0 <= self.numeral_rate <= 1.0):
            raise PolylexError("numeral_rate must be in [0, 1]")
        for size in self.alphabet_sizes:
            if size < self.n_pairs + self.stopword_count:
                raise PolylexError(
                    f"alphabet of {size} words cannot hold {self.n_pairs} pair members "
                    f"plus {self.stopword_count} stopwords"
                )
        if self.n_topics < 1 or self.docs_per_language < 1:
            raise PolylexError("n_topics and docs_per_language must be >= 1")


_CHARSETS = ("aeikmnrstu", "bcdfghlopv")

# Within-slice rank occupied by the first planted pair; keeps the very top
# rank unplanted so bands mix planted and unplanted sources.
_FIRST_PAIR_RANK = 1
_ZIPF_EXPONENT = 1.0


def _unique_words(rng: np.random.Generator, charset: str, count: int) -> list[str]:
    chars = list(charset)
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < count:
        length = int(rng.integers(4, 8))
        word = "".join(chars[i] for i in rng.integers(0, len(chars), size=length))
        if word not in seen:
            seen.add(word)
            out.append(word)
    return out


@dataclass
class SyntheticCorpus:
    """Everything gen_synthetic knows about what it planted."""

    corpus: Corpus
    gold: TranslationPairList
    seeds: SeedSet
    id_map: dict[int, int]
    true_labels: dict[str, str] = field(default_factory=dict)


def gen_synthetic(spec: SyntheticSpec) -> SyntheticCorpus:
    """Generate the corpus, the planted gold pairs, seed words and the
    document id map (language-1 line -> parallel language-2 line)."""
    word_rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 11]))
    scramble = 0 if spec.topic_scramble_seed is None else spec.topic_scramble_seed
    doc_rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 13, scramble]))

    n_topics = spec.n_topics
    words = [
        _unique_words(word_rng, _CHARSETS[li], spec.alphabet_sizes[li])
        for li in range(2)
    ]
    stopwords = [w[: spec.stopword_count] for w in words]
    content = [w[spec.stopword_count :] for w in words]

    # Topic slices: round-robin pair members first (at _FIRST_PAIR_RANK),
    # then the remaining content words.
    per_topic = [len(c) // n_topics for c in content]
    pairs_per_topic = math.ceil(spec.n_pairs / n_topics)
    for li in range(2):
        if per_topic[li] < _FIRST_PAIR_RANK + pairs_per_topic + 2:
            raise PolylexError(
                f"alphabet {li} too small: each of {n_topics} topics holds "
                f"{per_topic[li]} words but needs {_FIRST_PAIR_RANK + pairs_per_topic + 2}"
            )

    slices: list[list[list[str]]] = []  # [language][topic] -> ranked words
    pair_words: list[list[str]] = [[], []]
    for li in range(2):
        pool = list(content[li])
        topic_slices = [pool[t * per_topic[li] : (t + 1) * per_topic[li]] for t in range(n_topics)]
        slices.append(topic_slices)
    for pi in range(spec.n_pairs):
        topic = pi % n_topics
        rank = _FIRST_PAIR_RANK + pi // n_topics
        pair_words[0].append(slices[0][topic][rank])
        pair_words[1].append(slices[1][topic][rank])
    gold = TranslationPairList(list(zip(pair_words[0], pair_words[1])))
    partner = {}
    pair_index = {}
    for pi, (s, t) in enumerate(gold.pairs):
        partner[s] = t
        partner[t] = s
        pair_index[s] = pi
        pair_index[t] = pi

    topic_numerals = [str(2500 + t) for t in range(n_topics)]
    pair_numerals = [str(7000 + pi) for pi in range(spec.n_pairs)]

    # Zipf weights within a topic slice.
    zipf_cdfs = []
    for li in range(2):
        ranks = np.arange(1, per_topic[li] + 1, dtype=np.float64)
        weights = ranks ** (-_ZIPF_EXPONENT)
        cdf = np.cumsum(weights)
        zipf_cdfs.append(cdf / cdf[-1])

    # Optional scramble: language 2 topics draw from permuted word slices.
    topic_lookup = [list(range(n_topics)), list(range(n_topics))]
    if spec.topic_scramble_seed is not None:
        perm_rng = np.random.default_rng(
            np.random.SeedSequence([spec.rng_seed, 17, spec.topic_scramble_seed])
        )
        topic_lookup[1] = list(perm_rng.permutation(n_topics))

    # Each document concentrates its pair-rank draws on one focus pair,
    # zipf-chosen among its topic's pairs, so planted partners genuinely
    # co-occur. The redirect preserves every pair word's marginal frequency.
    pair_rank_hi = [
        _FIRST_PAIR_RANK + sum(1 for pi in range(spec.n_pairs) if pi % n_topics == t)
        for t in range(n_topics)
    ]
    focus_cdfs = []
    for t in range(n_topics):
        ranks = np.arange(_FIRST_PAIR_RANK, pair_rank_hi[t], dtype=np.float64)
        if ranks.size:
            w = (ranks + 1.0) ** (-_ZIPF_EXPONENT)
            focus_cdfs.append(np.cumsum(w) / w.sum())
        else:
            focus_cdfs.append(np.zeros(0))

    topics = doc_rng.integers(0, n_topics, size=spec.docs_per_language)
    focus_u = doc_rng.random(spec.docs_per_language)
    lengths = [
        np.maximum(doc_rng.poisson(spec.mean_doc_length, size=spec.docs_per_language), 2)
        for _ in range(2)
    ]

    documents: list[Document] = []
    for li in range(2):
        lang_slices = slices[li]
        lang_stop = stopwords[li]
        cdf = zipf_cdfs[li]
        my_pairs = set(pair_words[li])
        for di in range(spec.docs_per_language):
            topic = topic_lookup[li][int(topics[di])]
            slice_words = lang_slices[topic]
            length = int(lengths[li][di])
            if focus_cdfs[topic].size:
                focus_rank = _FIRST_PAIR_RANK + int(
                    np.searchsorted(focus_cdfs[topic], focus_u[di], side="right")
                )
                focus_rank = min(focus_rank, pair_rank_hi[topic] - 1)
            else:
                focus_rank = -1
            kind_r = doc_rng.random(length)
            rank_r = doc_rng.random(length)
            borrow_r = doc_rng.random(length)
            stop_i = doc_rng.integers(0, len(lang_stop), size=length)
            doc: Document = []
            for s in range(length):
                r = kind_r[s]
                if r < spec.numeral_rate:
                    prev = doc[-1] if doc else None
                    if prev in pair_index:
                        doc.append(pair_numerals[pair_index[prev]])
                    else:
                        doc.append(topic_numerals[topic])
                elif r < spec.numeral_rate + spec.stopword_rate:
                    doc.append(lang_stop[int(stop_i[s])])
                else:
                    rank = int(np.searchsorted(cdf, rank_r[s], side="right"))
                    rank = min(rank, len(slice_words) - 1)
                    if focus_rank >= 0 and _FIRST_PAIR_RANK <= rank < pair_rank_hi[topic]:
                        rank = focus_rank
                    word = slice_words[rank]
                    if word in my_pairs and borrow_r[s] < spec.borrowing_rate:
                        word = partner[word]
                    doc.append(word)
            documents.append(doc)

    corpus = Corpus(documents, source_tag=f"synthetic(seed={spec.rng_seed})")
    id_map = {i: spec.docs_per_language + i for i in range(spec.docs_per_language)}

    seeds_by_lang: dict[str, list[str]] = {}
    for li, lang in enumerate(spec.language_names):
        candidates = stopwords[li] + [
            w
            for topic_slice in slices[li]
            for w in topic_slice[: _FIRST_PAIR_RANK]
        ]
        seeds_by_lang[lang] = candidates[: spec.n_seed_words]
    seeds = SeedSet(seeds_by_lang)

    true_labels: dict[str, str] = {}
    for li, lang in enumerate(spec.language_names):
        for w in words[li]:
            true_labels[w] = lang
    for num in topic_numerals + pair_numerals:
        true_labels[num] = ABSTAIN

    return SyntheticCorpus(corpus, gold, seeds, id_map, true_labels)


def true_partition(synth: SyntheticCorpus) -> LanguagePartition:
    """Ground-truth partition of a generated corpus (numerals abstain)."""
    counts = synth.corpus.token_counts()
    labels = {w: l for w, l in synth.true_labels.items() if w in counts}
    langs = sorted({l for l in labels.values() if l != ABSTAIN})
    from .langid import frequency_bands

    vocabularies = {lang: {w for w, l in labels.items() if l == lang} for lang in langs}
    bands = {lang: frequency_bands(counts, members) for lang, members in vocabularies.items()}
    return LanguagePartition(labels, vocabularies, bands, dict(counts))


# ---------------------------------------------------------------------------
# Mining pipeline and ablations


@dataclass
class PipelineConfig:
    hyperparams: Hyperparams
    direction: Direction
    abstain_threshold: float = 0.025
    source_band: str = "0-5"
    sample_size: int = DEFAULT_SAMPLE_SIZE
    target_min_freq: int = DEFAULT_TARGET_MIN_FREQ
    n_candidates: int = DEFAULT_N
    mine_seed: int = 1
    n_workers: int = 1
    dataset_tag: str = ""


@dataclass
class PipelineResult:
    model: EmbeddingModel
    partition: LanguagePartition
    lexicon: Lexicon
    report: EvalReport
    successful_pairs: list[tuple[str, str]]  # (source, its correct top-1)


def run_mining_pipeline(
    corpus: Corpus,
    seeds: SeedSet,
    gold: dict[str, set[str]],
    cfg: PipelineConfig,
) -> PipelineResult:
    """Train, partition, mine and evaluate in one seeded pass."""
    model = train(corpus, cfg.hyperparams, n_workers=cfg.n_workers)
    part = estimate_partition(model, seeds, cfg.abstain_threshold)
    lex = mine_lexicon(
        model, part, cfg.direction,
        source_band=cfg.source_band, sample_size=cfg.sample_size,
        target_min_freq=cfg.target_min_freq, n=cfg.n_candidates,
        rng_seed=cfg.mine_seed,
    )
    report = evaluate_pk(lex, gold, dataset=cfg.dataset_tag)
    successful = [
        (w, cands[0].word)
        for w, cands in lex.entries.items()
        if w in gold and cands and cands[0].word in gold[w]
    ]
    return PipelineResult(model, part, lex, report, successful)


@dataclass
class AblationReport:
    baseline: EvalReport
    transformed: EvalReport
    retention: float
    transform: str

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "baseline": json.loads(self.baseline.to_json()),
                "transformed": json.loads(self.transformed.to_json()),
                "retention": self.retention,
                "transform": self.transform,
            },
            indent=2,
            sort_keys=True,
        )


def _reevaluate_successes(
    model: EmbeddingModel,
    part: LanguagePartition,
    successes: Sequence[tuple[str, str]],
    gold: dict[str, set[str]],
    cfg: PipelineConfig,
    dataset: str,
) -> tuple[EvalReport, float]:
    """Score exactly the baseline's successful top-1 sources on a new model."""
    if not successes:
        raise PolylexError("baseline produced no successful top-1 translations")
    entries = {}
    diagnostics = {}
    for word, _ in successes:
        try:
            entries[word] = top_translations(
                model, part, word, cfg.n_candidates, cfg.direction, cfg.target_min_freq
            )
        except PolylexError as exc:
            entries[word] = []
            diagnostics[word] = str(exc)
    lex = Lexicon(
        entries,
        cfg.direction,
        {
            "source_band": "baseline-successes",
            "sample_size": len(successes),
            "target_min_freq": cfg.target_min_freq,
            "n": cfg.n_candidates,
        },
        diagnostics,
    )
    report = evaluate_pk(lex, gold, dataset=dataset)
    return report, report.p_at[1]


def ablate_numbers(
    corpus: Corpus,
    seeds: SeedSet,
    gold: dict[str, set[str]],
    cfg: PipelineConfig,
    mask_token: str = DEFAULT_MASK_TOKEN,
    baseline: PipelineResult | None = None,
) -> AblationReport:
    """Retrain on a number-masked corpus and measure how much of the
    baseline's successful top-1 set survives."""
    base = baseline if baseline is not None else run_mining_pipeline(corpus, seeds, gold, cfg)
    masked = mask_numbers(corpus, mask_token)
    model2 = train(masked, cfg.hyperparams, n_workers=cfg.n_workers)
    part2 = estimate_partition(model2, seeds, cfg.abstain_threshold)
    transformed, retention = _reevaluate_successes(
        model2, part2, base.successful_pairs, gold, cfg, cfg.dataset_tag + "+mask-numbers"
    )
    return AblationReport(base.report, transformed, retention, f"mask_numbers({mask_token!r})")


def ablate_loanwords(
    corpus: Corpus,
    seeds: SeedSet,
    gold: dict[str, set[str]],
    cfg: PipelineConfig,
    exchange_seed: int = 1,
    baseline: PipelineResult | None = None,
) -> AblationReport:
    """Retrain after exchanging the baseline's successfully translated
    pairs to neutralize their borrowing, then measure retention."""
    base = baseline if baseline is not None else run_mining_pipeline(corpus, seeds, gold, cfg)
    pairs = TranslationPairList(list(base.successful_pairs))
    exchanged = loanword_exchange(corpus, pairs, base.partition, exchange_seed)
    model2 = train(exchanged, cfg.hyperparams, n_workers=cfg.n_workers)
    part2 = estimate_partition(model2, seeds, cfg.abstain_threshold)
    transformed, retention = _reevaluate_successes(
        model2, part2, base.successful_pairs, gold, cfg, cfg.dataset_tag + "+loanword-exchange"
    )
    return AblationReport(
        base.report, transformed, retention, f"loanword_exchange(seed={exchange_seed})"
    )


@dataclass
class CohesionReport:
    cohesive: EvalReport
    mismatched: EvalReport

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "cohesive": json.loads(self.cohesive.to_json()),
                "mismatched": json.loads(self.mismatched.to_json()),
            },
            indent=2,
            sort_keys=True,
        )


def ablate_cohesion(
    a_source_half: Corpus,
    a_target_half: Corpus,
    b_target_half: Corpus,
    seeds: SeedSet,
    gold: dict[str, set[str]],
    cfg: PipelineConfig,
    mix_seed: int = 1,
) -> CohesionReport:
    """Compare same-source mixing against cross-source mixing.

    The cohesive arm mixes both language halves of corpus A; the
    mismatched arm replaces A's target half with B's, removing the topical
    link between languages. Both arms run the identical seeded pipeline.
    """
    cohesive_corpus = mix_corpora(a_source_half, a_target_half, mix_seed)
    mismatched_corpus = mix_corpora(a_source_half, b_target_half, mix_seed)
    cohesive = run_mining_pipeline(cohesive_corpus, seeds, gold, cfg).report
    mismatched = run_mining_pipeline(mismatched_corpus, seeds, gold, cfg).report
    return CohesionReport(cohesive, mismatched)


def split_halves(synth: SyntheticCorpus, spec: SyntheticSpec) -> tuple[Corpus, Corpus]:
    """Per-language halves of a generated corpus (documents are laid out as
    one language block followed by the other)."""
    n = spec.docs_per_language
    docs = synth.corpus.documents
    return (
        Corpus([list(d) for d in docs[:n]], f"{synth.corpus.source_tag}/{spec.language_names[0]}"),
        Corpus([list(d) for d in docs[n:]], f"{synth.corpus.source_tag}/{spec.language_names[1]}"),
    )
