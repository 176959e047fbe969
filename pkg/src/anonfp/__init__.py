"""Anonymous-walk molecular fingerprints.

Graphs are decomposed into anonymous random walks, embedded with PV-DBOW and
negative sampling, and evaluated with an RBF-kernel SVM.
"""
__version__ = "0.1.0"

from .graphs import (FormatError, GraphSet, IngestionError, MolecularGraph, degree_view,
                     parse_tu_dataset, transition_view, write_tu_dataset)
from .walks import (WalkCorpus, anonymize, anonymous_walk_distribution, build_corpus,
                    count_anonymous_walks, sample_walk, walk_probability)
from .embed import EmbeddingModel, TrainConfig, draw_negatives, fingerprint, init_model, \
    sigmoid, train, train_pair
from .svm import decision_values, rbf_gram, train_svm
from .metrics import classification_metrics, roc_auc
from .evaluate import EvalReport, cross_validate, kfold_indices

__all__ = [
    "FormatError", "GraphSet", "IngestionError", "MolecularGraph", "degree_view",
    "parse_tu_dataset", "transition_view", "write_tu_dataset",
    "WalkCorpus", "anonymize", "anonymous_walk_distribution", "build_corpus",
    "count_anonymous_walks", "sample_walk", "walk_probability",
    "EmbeddingModel", "TrainConfig", "draw_negatives", "fingerprint", "init_model", "sigmoid",
    "train", "train_pair",
    "decision_values", "rbf_gram", "train_svm",
    "classification_metrics", "roc_auc",
    "EvalReport", "cross_validate", "kfold_indices",
]
