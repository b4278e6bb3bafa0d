"""Semi-supervised text categorization via recursive seeded k-means.

Label a large pool of unlabeled documents from a small labeled seed set:
documents are embedded into one dimension per class, the mixed collection is
partitioned by k-means recursively until each partition's labeled members
agree, and unseen documents are classified by nearest cluster centroid.
"""
from .classifier import Prediction, classify, classify_batch
from .corpus import (
    Corpus,
    Document,
    SplitSpec,
    TokenizerConfig,
    load_directory_corpus,
    make_training_collection,
    mask_labels,
    split_train_test,
    tokenize,
)
from .errors import DataError, InvariantError, TextRkmError
from .evaluation import EvalReport, confusion, format_report, score
from .harness import (
    SweepConfig,
    SweepTable,
    emit_results,
    replay_trial,
    run_sweep,
    run_trial,
)
from .representation import (
    TermClassWeights,
    embed,
    embed_corpus,
    embed_tokens,
    fit_term_weights,
    load_weights,
    save_weights,
)
from .rkmeans import (
    ClusterModel,
    FinalCluster,
    KMeansConfig,
    RecursiveConfig,
    build_model,
    choose_initial_seeds,
    cluster_class_stats,
    kmeans,
    load_model,
    majority_label,
    recursive_kmeans,
    relative_percentage,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterModel",
    "Corpus",
    "DataError",
    "Document",
    "EvalReport",
    "FinalCluster",
    "InvariantError",
    "KMeansConfig",
    "Prediction",
    "RecursiveConfig",
    "SplitSpec",
    "SweepConfig",
    "SweepTable",
    "TermClassWeights",
    "TextRkmError",
    "TokenizerConfig",
    "build_model",
    "choose_initial_seeds",
    "classify",
    "classify_batch",
    "cluster_class_stats",
    "confusion",
    "embed",
    "embed_corpus",
    "embed_tokens",
    "emit_results",
    "fit_term_weights",
    "format_report",
    "kmeans",
    "load_directory_corpus",
    "load_model",
    "load_weights",
    "majority_label",
    "make_training_collection",
    "mask_labels",
    "recursive_kmeans",
    "relative_percentage",
    "replay_trial",
    "run_sweep",
    "run_trial",
    "save_model",
    "save_weights",
    "score",
    "split_train_test",
    "tokenize",
]
