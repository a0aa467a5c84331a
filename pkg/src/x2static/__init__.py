"""Static word embeddings distilled from contextual-teacher vector streams.

The pipeline: preprocess raw text, build a frequency vocabulary, obtain a
per-token teacher-vector stream (from a real encoder via the exporter, or the
deterministic mock teacher), then either distill target embeddings with the
negative-sampling trainer or average-pool the stream into the ASE baseline,
and evaluate with cosine/Spearman word-similarity.
"""

__version__ = "0.1.0"

from .ase import AseAccumulator, CoverageReport, ase_accumulate, ase_finalize
from .corpus import (
    OOV_ID,
    EncodedCorpus,
    PreprocessConfig,
    TokenizedCorpus,
    Vocabulary,
    build_vocabulary,
    decode_corpus,
    encode_corpus,
    load_corpus,
    preprocess_corpus,
    save_corpus,
    tokenize,
)
from .embeddings import WordEmbeddings, init_matrix
from .evaluation import (
    EvalReport,
    SimilarityDataset,
    cosine_similarity,
    evaluate_dataset,
    fractional_ranks,
    load_similarity_dataset,
    nearest_neighbors,
    report_tsv,
    spearman_rho,
)
from .planted import (
    PlantedSpace,
    make_planted_space,
    planted_cosines,
    planted_pair_ids,
    synthesize_corpus,
)
from .stream import (
    SentenceRecord,
    StreamHeader,
    context_vector,
    mock_teacher_encode,
    read_stream,
    static_context_vector,
    write_stream,
)
from .trainer import (
    AdamState,
    NegativeTable,
    TrainerConfig,
    TrainResult,
    distill,
    keep_target,
    lazy_adam_step,
    logistic_loss,
    pair_loss,
    pair_loss_grads,
    sample_negatives,
)
