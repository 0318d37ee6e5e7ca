"""Polyglot skip-gram embeddings and constrained nearest-neighbor
bilingual lexicon mining for mixed-language corpora."""

__version__ = "0.1.0"

from .analysis import (
    AblationReport,
    CohesionReport,
    LWIRecord,
    PipelineConfig,
    PipelineResult,
    SyntheticCorpus,
    SyntheticSpec,
    ablate_cohesion,
    ablate_loanwords,
    ablate_numbers,
    adjacency_counts,
    gen_synthetic,
    lwi,
    pair_lwi,
    run_mining_pipeline,
    true_partition,
)
from .corpus import (
    Corpus,
    TranslationPairList,
    loanword_exchange,
    mask_numbers,
    mix_corpora,
    preprocess,
    read_corpus,
    read_pairs,
    read_raw_corpus,
    write_corpus,
    write_pairs,
)
from .embedding import (
    EmbeddingModel,
    Hyperparams,
    Neighbor,
    Vocab,
    build_vocab,
    char_ngrams,
    cosine_distance,
    embed_word,
    load_model,
    nearest_neighbors,
    save_subwords,
    save_text_model,
    train,
)
from .errors import (
    EmptyVocabularyError,
    IngestionError,
    PolylexError,
    PoolExhaustedError,
    UnembeddableTokenError,
    UntranslatableDocumentError,
)
from .langid import (
    ABSTAIN,
    LanguagePartition,
    SeedSet,
    estimate_partition,
    frequency_bands,
    read_partition,
    read_seeds,
    write_partition,
    write_seeds,
)
from .lexicon import (
    Direction,
    EvalReport,
    Lexicon,
    evaluate_pk,
    mine_lexicon,
    read_gold,
    read_lexicon,
    top_translations,
    translate_word,
    write_lexicon,
)
from .xlingual import (
    DocEmbedding,
    SamplePool,
    SelectionPolicy,
    document_embedding,
    mutual_candidates,
    nn_sample,
    read_doc_embeddings,
    retrieval_eval,
    translate_embedding,
    write_doc_embeddings,
)
