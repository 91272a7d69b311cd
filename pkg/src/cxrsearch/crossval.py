"""K-fold experiment orchestration for image search and the forest baseline.

One top-level seed drives everything: the fold shuffle and each fold's
forest training derive child seeds from it, so repeated runs produce
byte-identical reports and folds can be evaluated in any order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .forest import predict_proba_many, train_forest
from .knn import SearchParams
from .stats import auc, roc_curve_detailed
from .store import FeatureStore
from .vote import score_queries

Method = Literal["image_search", "random_forest"]


@dataclass(frozen=True)
class FoldReport:
    fold_id: int  # 1-based
    auc: float
    roc_points: list[tuple[float, float]]  # (fpr, tpr)
    roc_thresholds: list[float]
    method: Method
    param: int  # K for image_search, tree count for random_forest


@dataclass(frozen=True)
class ExperimentReport:
    per_fold: list[FoldReport]
    mean_auc: float
    config: dict


def kfold_partition(n: int, folds: int, seed: int, *,
                    stratify_labels: Sequence[int] | None = None
                    ) -> list[np.ndarray]:
    """Seeded uniform shuffle of 0..n-1 cut into ``folds`` contiguous sections.

    The first n % folds sections get the extra record. Disjoint cover of
    0..n-1; a pure function of (n, folds, seed). The default is the plain
    unstratified split; ``stratify_labels`` applies the same scheme within
    each class instead (synthetic stress tests only).
    """
    if folds < 2:
        raise ValueError(f"need >= 2 folds, got {folds}")
    if folds > n:
        raise ValueError(f"folds ({folds}) exceed record count ({n})")
    rng = np.random.Generator(np.random.PCG64(_child_seed(seed, 0)))
    if stratify_labels is None:
        groups = [rng.permutation(n)]
    else:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n,):
            raise ValueError("stratify_labels must have one entry per record")
        groups = [rng.permutation(np.flatnonzero(labels == value))
                  for value in np.unique(labels)]
    parts: list[list[np.ndarray]] = [[] for _ in range(folds)]
    for perm in groups:
        base, extra = divmod(len(perm), folds)
        start = 0
        for i in range(folds):
            size = base + (1 if i < extra else 0)
            parts[i].append(perm[start:start + size])
            start += size
    return [np.sort(np.concatenate(p).astype(np.int64)) for p in parts]


def _child_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *key])


def run_experiment(store: FeatureStore, folds: int, seed: int, method: Method,
                   param: int, *, threads: int | None = None,
                   exclude_queries: bool = True,
                   stratified: bool = False) -> ExperimentReport:
    """Cross-validated AUC for one method configuration.

    image_search scores each validation record by majority vote over its
    top ``param`` neighbors, with the whole validation fold masked out of
    the candidate pool (unless ``exclude_queries`` is off). random_forest
    trains ``param`` trees on the training folds and scores validation
    rows by predicted positive probability.
    """
    if method not in ("image_search", "random_forest"):
        raise ValueError(f"unknown method {method!r}")
    labels = store.labels
    parts = kfold_partition(store.n_records, folds, seed,
                            stratify_labels=labels if stratified else None)
    reports = []
    for fold_id, val_idx in enumerate(parts, start=1):
        val_labels = labels[val_idx]
        train_mask = np.ones(store.n_records, dtype=bool)
        train_mask[val_idx] = False
        train_labels = labels[train_mask]
        for name, part in (("validation", val_labels),
                           ("training", train_labels)):
            if part.min() == part.max():
                raise ValueError(
                    f"fold {fold_id} degenerate: {name} portion lacks one "
                    f"class (cannot evaluate)")
        if method == "image_search":
            params = SearchParams(
                k=param,
                exclude=frozenset(val_idx.tolist()) if exclude_queries
                else frozenset())
            pairs = score_queries(store, val_idx.tolist(), params,
                                  threads=threads)
        else:
            train_idx = np.flatnonzero(train_mask)
            model = train_forest(
                np.asarray(store.vectors[train_idx]), labels[train_idx],
                t=param, seed=int(_child_seed(seed, 1, fold_id)
                                  .generate_state(1)[0]))
            probs = predict_proba_many(model, np.asarray(store.vectors[val_idx]))
            pairs = list(zip(probs.tolist(), val_labels.tolist()))
        thresholds, fpr, tpr = roc_curve_detailed(pairs)
        reports.append(FoldReport(
            fold_id=fold_id,
            auc=auc(pairs),
            roc_points=list(zip(fpr.tolist(), tpr.tolist())),
            roc_thresholds=thresholds.tolist(),
            method=method,
            param=param,
        ))
    mean_auc = float(np.mean([r.auc for r in reports]))
    config = {
        "store": store.path or "in-memory",
        "n_records": store.n_records,
        "dim": store.dim,
        "method": method,
        "param": param,
        "folds": folds,
        "seed": seed,
        "exclude_queries": exclude_queries,
        "stratified": stratified,
    }
    return ExperimentReport(per_fold=reports, mean_auc=mean_auc, config=config)


def report_to_json(report: ExperimentReport) -> str:
    """Stable serialization: equal configs and seeds give identical bytes."""
    doc = {
        "config": report.config,
        "per_fold": [
            {
                "fold": r.fold_id,
                "auc": r.auc,
                "roc": [[fpr, tpr] for fpr, tpr in r.roc_points],
            }
            for r in report.per_fold
        ],
        "mean_auc": report.mean_auc,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_roc_csv(fold: FoldReport, path) -> None:
    """One row per ROC point: threshold, fpr, tpr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for thr, (fpr, tpr) in zip(fold.roc_thresholds, fold.roc_points):
            writer.writerow([repr(thr), repr(fpr), repr(tpr)])
