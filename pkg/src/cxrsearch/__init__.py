"""Chest X-ray retrieval: exact k-NN over deep feature stores, majority-vote
classification, and the 10-fold evaluation harness with its forest baseline."""

from .crossval import (ExperimentReport, FoldReport, kfold_partition,
                       report_to_json, run_experiment, write_roc_csv)
from .forest import (ForestModel, balanced_weights, load_forest,
                     predict_proba, predict_proba_many, save_forest,
                     train_forest)
from .knn import (Neighbor, SearchParams, batch_search, resolve_threads,
                  squared_euclidean, top_k_search)
from .stats import (TTestResult, auc, betainc_reg, roc_curve,
                    roc_curve_detailed, student_t_two_tailed, trapezoid_area,
                    welch_ttest)
from .store import (FeatureStore, RecordMeta, StoreError, StoreWriter,
                    open_store, read_meta, write_store)
from .vote import VoteResult, majority_vote, score_queries

__version__ = "0.1.0"

__all__ = [
    "ExperimentReport", "FeatureStore", "FoldReport", "ForestModel",
    "Neighbor", "RecordMeta", "SearchParams", "StoreError", "StoreWriter",
    "TTestResult", "VoteResult", "auc", "balanced_weights", "batch_search",
    "betainc_reg", "kfold_partition", "load_forest", "majority_vote",
    "open_store", "predict_proba", "predict_proba_many", "read_meta",
    "report_to_json", "resolve_threads", "roc_curve", "roc_curve_detailed",
    "run_experiment", "save_forest", "score_queries", "squared_euclidean",
    "student_t_two_tailed", "top_k_search", "train_forest", "trapezoid_area",
    "welch_ttest", "write_roc_csv", "write_store",
]
