"""Command line interface: one seeded, file-based subcommand per stage.

Every file output gets a `<file>.manifest.json` recording the subcommand,
resolved flags, input digests, seeds and wall time, so a run can be
reproduced from its manifest. Exit codes: 0 success, 1 usage error,
2 data or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import analysis, corpus as corpus_mod, embedding, langid, lexicon, xlingual
from .errors import PolylexError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Run record written beside every output artifact."""

    def __init__(self, subcommand: str, args: argparse.Namespace):
        self.started = time.time()
        self.subcommand = subcommand
        self.flags = {k: v for k, v in vars(args).items() if k != "func"}
        self.inputs: dict[str, str] = {}

    def add_input(self, path) -> None:
        if path is not None:
            self.inputs[str(path)] = _digest(path)

    def write_for(self, out_path) -> None:
        payload = {
            "subcommand": self.subcommand,
            "flags": {k: str(v) for k, v in self.flags.items()},
            "inputs": self.inputs,
            "version": __version__,
            "wall_time_s": round(time.time() - self.started, 3),
        }
        with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("POLYLEX_THREADS", "1"))


def _hyperparams(args) -> embedding.Hyperparams:
    return embedding.Hyperparams(
        dim=args.dim,
        min_n=args.min_n,
        max_n=args.max_n,
        epochs=args.epochs,
        window=args.window,
        negatives=args.negatives,
        min_count=args.min_count,
        learning_rate=args.learning_rate,
        bucket_count=args.buckets,
        subsample=args.subsample,
        rng_seed=args.seed,
    )


def _add_train_flags(p) -> None:
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--min-n", dest="min_n", type=int, default=2)
    p.add_argument("--max-n", dest="max_n", type=int, default=4)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--min-count", dest="min_count", type=int, default=5)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.05)
    p.add_argument("--buckets", type=int, default=2_000_000)
    p.add_argument("--subsample", type=float, default=1e-4)


def _load_model(args) -> embedding.EmbeddingModel:
    counts = None
    if getattr(args, "partition", None):
        counts = langid.read_partition(args.partition).counts
    return embedding.load_model(args.model, getattr(args, "subwords", None), counts=counts)


def _pool_with_cache(model, pool_path, emb_path):
    """Load pool docs; reuse the persisted embedding matrix when present."""
    docs = corpus_mod.read_corpus(pool_path).documents
    if emb_path and os.path.exists(emb_path):
        emb = xlingual.read_doc_embeddings(emb_path)
        return xlingual.SamplePool(docs, emb)
    pool = xlingual.SamplePool.build(model, docs)
    if emb_path:
        xlingual.write_doc_embeddings(pool.embeddings, emb_path)
    return pool


# --------------------------------------------------------------------------
# subcommand implementations


def _cmd_preprocess(args, manifest):
    manifest.add_input(args.input)
    c = corpus_mod.read_raw_corpus(args.input)
    corpus_mod.write_corpus(c, args.out)
    manifest.write_for(args.out)


def _cmd_mix(args, manifest):
    manifest.add_input(args.a)
    manifest.add_input(args.b)
    mixed = corpus_mod.mix_corpora(
        corpus_mod.read_corpus(args.a), corpus_mod.read_corpus(args.b), args.seed
    )
    corpus_mod.write_corpus(mixed, args.out)
    manifest.write_for(args.out)


def _cmd_mask_numbers(args, manifest):
    manifest.add_input(args.input)
    masked = corpus_mod.mask_numbers(corpus_mod.read_corpus(args.input), args.mask)
    corpus_mod.write_corpus(masked, args.out)
    manifest.write_for(args.out)


def _cmd_exchange(args, manifest):
    for p in (args.input, args.pairs, args.partition):
        manifest.add_input(p)
    exchanged = corpus_mod.loanword_exchange(
        corpus_mod.read_corpus(args.input),
        corpus_mod.read_pairs(args.pairs),
        langid.read_partition(args.partition),
        args.seed,
    )
    corpus_mod.write_corpus(exchanged, args.out)
    manifest.write_for(args.out)


def _cmd_train(args, manifest):
    manifest.add_input(args.input)
    c = corpus_mod.read_corpus(args.input)
    model = embedding.train(c, _hyperparams(args), n_workers=_threads(args))
    embedding.save_text_model(model, args.out)
    manifest.write_for(args.out)
    if args.subwords_out:
        embedding.save_subwords(model, args.subwords_out)
        manifest.write_for(args.subwords_out)


def _cmd_langid(args, manifest):
    for p in (args.model, args.subwords, args.corpus, args.seeds):
        manifest.add_input(p)
    # the text model format carries no counts; recount them from the corpus
    counts = corpus_mod.read_corpus(args.corpus).token_counts()
    model = embedding.load_model(args.model, args.subwords, counts=counts)
    seeds = langid.read_seeds(args.seeds)
    part = langid.estimate_partition(model, seeds, args.abstain_threshold)
    langid.write_partition(part, args.out)
    manifest.write_for(args.out)


def _cmd_mine(args, manifest):
    for p in (args.model, args.subwords, args.partition):
        manifest.add_input(p)
    model = _load_model(args)
    part = langid.read_partition(args.partition)
    lex = lexicon.mine_lexicon(
        model, part, lexicon.Direction.parse(args.dir),
        source_band=args.band, sample_size=args.sample,
        target_min_freq=args.min_target_freq, n=args.n, rng_seed=args.seed,
    )
    lexicon.write_lexicon(lex, args.out)
    manifest.write_for(args.out)
    for word, reason in lex.diagnostics.items():
        print(f"warning: {word}: {reason}", file=sys.stderr)


def _cmd_eval(args, manifest):
    manifest.add_input(args.lexicon)
    manifest.add_input(args.gold)
    k_values = [int(k) for k in args.k.split(",")]
    lex = lexicon.read_lexicon(
        args.lexicon, lexicon.Direction.parse(args.dir), {"n": max(k_values)}
    )
    report = lexicon.evaluate_pk(lex, lexicon.read_gold(args.gold), k_values, dataset=args.dataset)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        manifest.write_for(args.out)
    else:
        print(report.to_json())


def _cmd_translate_docs(args, manifest):
    for p in (args.model, args.subwords, args.partition, args.docs):
        manifest.add_input(p)
    model = _load_model(args)
    part = langid.read_partition(args.partition)
    direction = lexicon.Direction.parse(args.dir)
    policy = xlingual.SelectionPolicy(args.policy)
    docs = corpus_mod.read_corpus(args.docs).documents
    dim = model.dim
    rows = []
    failed = []
    cache: dict[str, list[str]] = {}
    for i, doc in enumerate(docs):
        try:
            emb = xlingual.translate_embedding(
                model, part, doc, args.n, direction, policy,
                rng_seed=args.seed + i, target_min_freq=args.min_target_freq,
                candidate_cache=cache,
            )
            rows.append(emb.vector)
        except PolylexError:
            rows.append(np.zeros(dim))
            failed.append(i)
    xlingual.write_doc_embeddings(np.vstack(rows), args.out)
    manifest.write_for(args.out)
    if failed:
        print(f"warning: untranslatable documents (zero rows): {failed}", file=sys.stderr)


def _cmd_nn_sample(args, manifest):
    for p in (args.model, args.subwords, args.partition, args.seed_docs, args.pool):
        manifest.add_input(p)
    model = _load_model(args)
    pool = _pool_with_cache(model, args.pool, args.pool_embeddings)
    seed_docs = corpus_mod.read_corpus(args.seed_docs).documents
    if args.seed_embeddings:
        manifest.add_input(args.seed_embeddings)
        seed_emb = xlingual.read_doc_embeddings(args.seed_embeddings)
    else:
        seed_emb = np.vstack(
            [xlingual.document_embedding(model, d).vector for d in seed_docs]
        )
    picked = xlingual.nn_sample(seed_emb, pool, args.size, seed_docs=seed_docs)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rank, pid in enumerate(picked, start=1):
            fh.write(f"{rank}\t{pid}\t{' '.join(pool.documents[pid])}\n")
    manifest.write_for(args.out)


def _cmd_retrieval_eval(args, manifest):
    for p in (args.model, args.subwords, args.partition, args.source_docs, args.pool, args.gold):
        manifest.add_input(p)
    model = _load_model(args)
    part = langid.read_partition(args.partition)
    pool = _pool_with_cache(model, args.pool, args.pool_embeddings)
    source_docs = corpus_mod.read_corpus(args.source_docs).documents
    gold = {}
    for lineno, line in enumerate(corpus_mod.iter_decoded_lines(args.gold), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise PolylexError(f"{args.gold}: line {lineno}: expected `source<TAB>target` ids")
        gold[int(parts[0])] = int(parts[1])
    report = xlingual.retrieval_eval(
        model, part, source_docs, pool, gold, args.n,
        lexicon.Direction.parse(args.dir), xlingual.SelectionPolicy(args.policy),
        k_values=[int(k) for k in args.k.split(",")],
        rng_seed=args.seed, target_min_freq=args.min_target_freq,
        dataset=args.dataset,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        manifest.write_for(args.out)
    else:
        print(report.to_json())


def _cmd_lwi(args, manifest):
    manifest.add_input(args.input)
    manifest.add_input(args.partition)
    analysis.write_lwi_report(
        corpus_mod.read_corpus(args.input),
        langid.read_partition(args.partition),
        args.out,
        both_neighbors=args.both_neighbors,
    )
    manifest.write_for(args.out)


def _pipeline_cfg(args) -> analysis.PipelineConfig:
    return analysis.PipelineConfig(
        hyperparams=_hyperparams(args),
        direction=lexicon.Direction.parse(args.dir),
        abstain_threshold=args.abstain_threshold,
        source_band=args.band,
        sample_size=args.sample,
        target_min_freq=args.min_target_freq,
        n_candidates=args.n,
        mine_seed=args.seed,
        n_workers=_threads(args),
    )


def _cmd_ablate(args, manifest):
    if args.transform == "cohesion":
        missing = [f for f in ("src_a", "tgt_a", "tgt_b") if getattr(args, f) is None]
        if missing:
            raise _UsageError("ablate cohesion needs --src-a, --tgt-a and --tgt-b")
    elif args.corpus is None:
        raise _UsageError(f"ablate {args.transform} needs --corpus")
    cfg = _pipeline_cfg(args)
    if args.transform == "cohesion":
        for p in (args.src_a, args.tgt_a, args.tgt_b, args.seeds, args.gold):
            manifest.add_input(p)
        report = analysis.ablate_cohesion(
            corpus_mod.read_corpus(args.src_a),
            corpus_mod.read_corpus(args.tgt_a),
            corpus_mod.read_corpus(args.tgt_b),
            langid.read_seeds(args.seeds),
            lexicon.read_gold(args.gold),
            cfg,
            mix_seed=args.mix_seed,
        )
    else:
        for p in (args.corpus, args.seeds, args.gold):
            manifest.add_input(p)
        c = corpus_mod.read_corpus(args.corpus)
        seeds = langid.read_seeds(args.seeds)
        gold = lexicon.read_gold(args.gold)
        if args.transform == "numbers":
            report = analysis.ablate_numbers(c, seeds, gold, cfg, mask_token=args.mask)
        else:
            report = analysis.ablate_loanwords(c, seeds, gold, cfg, exchange_seed=args.exchange_seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    manifest.write_for(args.out)


def _cmd_synth(args, manifest):
    spec = analysis.SyntheticSpec(
        alphabet_sizes=(args.alphabet, args.alphabet),
        n_topics=args.topics,
        docs_per_language=args.docs,
        mean_doc_length=args.doc_length,
        n_pairs=args.pairs,
        borrowing_rate=args.borrowing_rate,
        numeral_rate=args.numeral_rate,
        rng_seed=args.seed,
    )
    synth = analysis.gen_synthetic(spec)
    corpus_mod.write_corpus(synth.corpus, args.out)
    manifest.write_for(args.out)
    corpus_mod.write_pairs(synth.gold, args.gold_out)
    manifest.write_for(args.gold_out)
    langid.write_seeds(synth.seeds, args.seeds_out)
    manifest.write_for(args.seeds_out)
    with open(args.idmap_out, "w", encoding="utf-8") as fh:
        for src, tgt in synth.id_map.items():
            fh.write(f"{src}\t{tgt}\n")
    manifest.write_for(args.idmap_out)


# --------------------------------------------------------------------------
# argument wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="polylex", description=__doc__)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count; 1 (default) is deterministic; "
                             "POLYLEX_THREADS overrides the default")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("preprocess", help="clean a raw text file into corpus format")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("mix", help="shuffle two corpora together at document level")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("mask-numbers", help="replace all-digit tokens with a mask token")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", default=analysis.DEFAULT_MASK_TOKEN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask_numbers)

    p = sub.add_parser("exchange", help="frequency-preserving loanword exchange")
    p.add_argument("--input", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_exchange)

    p = sub.add_parser("train", help="train the subword skip-gram model")
    p.add_argument("--input", required=True)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="text model file")
    p.add_argument("--subwords-out", dest="subwords_out", default=None,
                   help="binary subword sidecar")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("langid", help="estimate the language partition")
    p.add_argument("--model", required=True)
    p.add_argument("--subwords", default=None)
    p.add_argument("--corpus", required=True, help="corpus file, used to recount frequencies")
    p.add_argument("--seeds", required=True)
    p.add_argument("--abstain-threshold", dest="abstain_threshold", type=float,
                   default=langid.DEFAULT_ABSTAIN_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_langid)

    p = sub.add_parser("mine", help="mine a lexicon by constrained nearest neighbors")
    p.add_argument("--model", required=True)
    p.add_argument("--subwords", default=None)
    p.add_argument("--partition", required=True)
    p.add_argument("--dir", required=True, help="direction, e.g. hi_e:en")
    p.add_argument("--band", default="0-5", choices=list(langid.BAND_NAMES))
    p.add_argument("--sample", type=int, default=lexicon.DEFAULT_SAMPLE_SIZE)
    p.add_argument("--min-target-freq", dest="min_target_freq", type=int,
                   default=lexicon.DEFAULT_TARGET_MIN_FREQ)
    p.add_argument("--n", type=int, default=lexicon.DEFAULT_N)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("eval", help="p@K of a lexicon against a gold dictionary")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--dir", default="source:target")
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--dataset", default="")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("translate-docs", help="translated document embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--subwords", default=None)
    p.add_argument("--partition", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--dir", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--policy", choices=["random", "top"], default="random")
    p.add_argument("--min-target-freq", dest="min_target_freq", type=int,
                   default=lexicon.DEFAULT_TARGET_MIN_FREQ)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="text matrix, one row per document")
    p.set_defaults(func=_cmd_translate_docs)

    p = sub.add_parser("nn-sample", help="expand seed documents inside a pool")
    p.add_argument("--model", required=True)
    p.add_argument("--subwords", default=None)
    p.add_argument("--partition", default=None)
    p.add_argument("--seed-docs", dest="seed_docs", required=True)
    p.add_argument("--seed-embeddings", dest="seed_embeddings", default=None,
                   help="text matrix overriding the seed docs' own embeddings")
    p.add_argument("--pool", required=True)
    p.add_argument("--pool-embeddings", dest="pool_embeddings", default=None,
                   help="persisted pool embedding matrix (created when absent)")
    p.add_argument("--size", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_nn_sample)

    p = sub.add_parser("retrieval-eval", help="translation retrieval p@K over a pool")
    p.add_argument("--model", required=True)
    p.add_argument("--subwords", default=None)
    p.add_argument("--partition", required=True)
    p.add_argument("--source-docs", dest="source_docs", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--pool-embeddings", dest="pool_embeddings", default=None)
    p.add_argument("--gold", required=True, help="TSV source_line<TAB>pool_line, 0-based")
    p.add_argument("--dir", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--policy", choices=["random", "top"], default="top")
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--min-target-freq", dest="min_target_freq", type=int,
                   default=lexicon.DEFAULT_TARGET_MIN_FREQ)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dataset", default="")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_retrieval_eval)

    p = sub.add_parser("lwi", help="loan word index report")
    p.add_argument("--input", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--both-neighbors", dest="both_neighbors", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lwi)

    p = sub.add_parser("ablate", help="before/after ablation pipelines")
    p.add_argument("transform", choices=["numbers", "loanwords", "cohesion"])
    p.add_argument("--corpus", default=None)
    p.add_argument("--src-a", dest="src_a", default=None, help="cohesion: source-language half of A")
    p.add_argument("--tgt-a", dest="tgt_a", default=None, help="cohesion: target-language half of A")
    p.add_argument("--tgt-b", dest="tgt_b", default=None, help="cohesion: target-language half of B")
    p.add_argument("--seeds", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--dir", required=True)
    _add_train_flags(p)
    p.add_argument("--abstain-threshold", dest="abstain_threshold", type=float,
                   default=langid.DEFAULT_ABSTAIN_THRESHOLD)
    p.add_argument("--band", default="0-5", choices=list(langid.BAND_NAMES))
    p.add_argument("--sample", type=int, default=lexicon.DEFAULT_SAMPLE_SIZE)
    p.add_argument("--min-target-freq", dest="min_target_freq", type=int,
                   default=lexicon.DEFAULT_TARGET_MIN_FREQ)
    p.add_argument("--n", type=int, default=lexicon.DEFAULT_N)
    p.add_argument("--mask", default=analysis.DEFAULT_MASK_TOKEN)
    p.add_argument("--exchange-seed", dest="exchange_seed", type=int, default=1)
    p.add_argument("--mix-seed", dest="mix_seed", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("synth", help="generate a planted-lexicon synthetic corpus")
    p.add_argument("--alphabet", type=int, default=2000)
    p.add_argument("--topics", type=int, default=20)
    p.add_argument("--docs", type=int, default=10_000)
    p.add_argument("--doc-length", dest="doc_length", type=float, default=12.0)
    p.add_argument("--pairs", type=int, default=150)
    p.add_argument("--borrowing-rate", dest="borrowing_rate", type=float, default=0.15)
    p.add_argument("--numeral-rate", dest="numeral_rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--gold-out", dest="gold_out", required=True)
    p.add_argument("--seeds-out", dest="seeds_out", required=True)
    p.add_argument("--idmap-out", dest="idmap_out", required=True)
    p.set_defaults(func=_cmd_synth)

    return parser


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    manifest = Manifest(args.subcommand, args)
    try:
        args.func(args, manifest)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PolylexError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
