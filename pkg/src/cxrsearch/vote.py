"""Majority-vote classification over retrieved neighbors.

The vote is unweighted: each of the K neighbors contributes one vote
regardless of distance. The score is the positive fraction positives/K,
which quantizes ROC thresholds to at most K+1 distinct values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .knn import Neighbor, SearchParams, batch_search
from .store import FeatureStore


@dataclass(frozen=True)
class VoteResult:
    """Positive-class likelihood and the strict-majority decision."""

    score: float
    decision: int  # 1 = positive
    k: int
    positives: int


def majority_vote(neighbors: Sequence[Neighbor]) -> VoteResult:
    """Vote over a neighbor list; positive iff positives are a strict majority.

    An exact half split (even k only) is decided negative.
    """
    k = len(neighbors)
    if k == 0:
        raise ValueError("empty neighbor list")
    positives = sum(1 for n in neighbors if n.label == 1)
    return VoteResult(
        score=positives / k,
        decision=1 if 2 * positives > k else 0,
        k=k,
        positives=positives,
    )


def score_queries(store: FeatureStore, indices: Sequence[int],
                  params: SearchParams, *,
                  threads: int | None = None) -> list[tuple[float, int]]:
    """Vote score paired with ground-truth label for each store record.

    Each index names a store row used as the query; its true label comes
    from the store metadata. Pass the queried rows in ``params.exclude``
    to keep them out of their own candidate pools.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= store.n_records):
        raise ValueError("query index out of range")
    queries = [store.vectors[i] for i in idx]
    results = batch_search(store, queries, params, threads=threads)
    labels = store.labels
    return [(majority_vote(nbrs).score, int(labels[i]))
            for i, nbrs in zip(idx, results)]
