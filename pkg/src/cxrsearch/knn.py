"""Exact top-K Euclidean search over a feature store.

Distances are squared (ordering is the same as true Euclidean, so the sqrt
is never taken). Per-row accumulation runs in eight fixed float64 lanes, so
a row's dist2 is bit-identical no matter how the scan is chunked or how
many worker threads run; parallelism is only ever across rows.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .store import FeatureStore

# Rows per scan chunk. Fixed: chunk boundaries must not move with the
# thread count, or per-chunk candidate sets would differ.
CHUNK_ROWS = 16384

THREADS_ENV = "CXR_CBIR_THREADS"


@dataclass(frozen=True)
class Neighbor:
    """One retrieval hit."""

    index: int
    dist2: float
    label: int


@dataclass(frozen=True)
class SearchParams:
    """Top-K search configuration.

    ``exclude`` masks record indices out of the candidate pool (used to
    hold out a validation fold during cross-validation).
    """

    k: int
    exclude: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "exclude", frozenset(self.exclude))


@njit(cache=True, nogil=True)
def _dist2_rows(block, query, out):  # pragma: no cover - compiled
    n, d = block.shape
    for i in range(n):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        s5 = 0.0
        s6 = 0.0
        s7 = 0.0
        j = 0
        while j + 8 <= d:
            d0 = np.float64(block[i, j] - query[j])
            s0 += d0 * d0
            d1 = np.float64(block[i, j + 1] - query[j + 1])
            s1 += d1 * d1
            d2 = np.float64(block[i, j + 2] - query[j + 2])
            s2 += d2 * d2
            d3 = np.float64(block[i, j + 3] - query[j + 3])
            s3 += d3 * d3
            d4 = np.float64(block[i, j + 4] - query[j + 4])
            s4 += d4 * d4
            d5 = np.float64(block[i, j + 5] - query[j + 5])
            s5 += d5 * d5
            d6 = np.float64(block[i, j + 6] - query[j + 6])
            s6 += d6 * d6
            d7 = np.float64(block[i, j + 7] - query[j + 7])
            s7 += d7 * d7
            j += 8
        while j < d:
            d0 = np.float64(block[i, j] - query[j])
            s0 += d0 * d0
            j += 1
        out[i] = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))


def squared_euclidean(a: Sequence[float] | np.ndarray,
                      b: Sequence[float] | np.ndarray) -> float:
    """Sum of squared per-dimension differences between two vectors.

    Uses the same fixed-lane kernel as the scan, so a value computed here
    is bit-identical to the dist2 the engine reports for the same pair.
    """
    a = np.ascontiguousarray(a, dtype=np.float32)
    b = np.ascontiguousarray(b, dtype=np.float32)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("inputs must be 1-D vectors")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    out = np.empty(1, dtype=np.float64)
    _dist2_rows(a.reshape(1, -1), b, out)
    return float(out[0])


def resolve_threads(threads: int | None = None) -> int:
    """Worker thread count, capped by the CXR_CBIR_THREADS env var."""
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    cap = os.environ.get(THREADS_ENV)
    if cap:
        threads = min(threads, max(1, int(cap)))
    return threads


def _validate_query(store: FeatureStore, query: np.ndarray,
                    label: str = "query") -> np.ndarray:
    q = np.ascontiguousarray(query, dtype=np.float32)
    if q.ndim != 1 or q.shape[0] != store.dim:
        raise ValueError(
            f"{label}: dimension mismatch: store dim {store.dim}, "
            f"query shape {tuple(np.shape(query))}")
    if not np.isfinite(q).all():
        raise ValueError(f"{label}: non-finite value in query vector")
    return q


def _exclusion_mask(store: FeatureStore,
                    exclude: Iterable[int]) -> np.ndarray | None:
    idx = np.fromiter(exclude, dtype=np.int64)
    if idx.size == 0:
        return None
    if idx.min() < 0 or idx.max() >= store.n_records:
        raise ValueError("exclude contains out-of-range record indices")
    mask = np.zeros(store.n_records, dtype=bool)
    mask[idx] = True
    return mask


def _chunk_candidates(vectors: np.ndarray, query: np.ndarray, start: int,
                      stop: int, k: int,
                      excluded: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """(indices, dist2) of the <=k best rows of one chunk, by (dist2, index)."""
    block = vectors[start:stop]
    d = np.empty(stop - start, dtype=np.float64)
    _dist2_rows(block, query, d)
    if excluded is not None:
        d[excluded[start:stop]] = np.inf
    if d.shape[0] > k:
        kth = np.partition(d, k - 1)[k - 1]
        keep = np.flatnonzero(d <= kth)
    else:
        keep = np.arange(d.shape[0])
    dk = d[keep]
    finite = np.isfinite(dk)
    keep, dk = keep[finite], dk[finite]
    order = np.lexsort((keep, dk))[:k]
    return keep[order] + start, dk[order]


def top_k_search(store: FeatureStore, query: np.ndarray, params: SearchParams,
                 *, threads: int | None = None) -> list[Neighbor]:
    """The k candidates nearest to ``query``, ascending by (dist2, index).

    A pure function of (store, query, params): chunking and thread count
    never change the result, including distance bit patterns.
    """
    q = _validate_query(store, query)
    mask = _exclusion_mask(store, params.exclude)
    pool = store.n_records - (int(mask.sum()) if mask is not None else 0)
    if params.k > pool:
        raise ValueError(
            f"k exceeds pool: k={params.k}, candidate pool has {pool} records")
    spans = [(s, min(s + CHUNK_ROWS, store.n_records))
             for s in range(0, store.n_records, CHUNK_ROWS)]
    nt = resolve_threads(threads)
    if nt == 1 or len(spans) == 1:
        parts = [_chunk_candidates(store.vectors, q, s, e, params.k, mask)
                 for s, e in spans]
    else:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            parts = list(ex.map(
                lambda span: _chunk_candidates(
                    store.vectors, q, span[0], span[1], params.k, mask),
                spans))
    idx = np.concatenate([p[0] for p in parts])
    dist2 = np.concatenate([p[1] for p in parts])
    order = np.lexsort((idx, dist2))[:params.k]
    labels = store.labels
    return [Neighbor(index=int(i), dist2=float(d), label=int(labels[i]))
            for i, d in zip(idx[order], dist2[order])]


def batch_search(store: FeatureStore, queries: Sequence[np.ndarray],
                 params: SearchParams, *,
                 threads: int | None = None) -> list[list[Neighbor]]:
    """``top_k_search`` for each query; queries may run concurrently."""
    validated = [_validate_query(store, q, label=f"query {i}")
                 for i, q in enumerate(queries)]
    if not validated:
        return []
    nt = resolve_threads(threads)
    if len(validated) == 1:
        return [top_k_search(store, validated[0], params, threads=nt)]
    if nt == 1:
        return [top_k_search(store, q, params, threads=1) for q in validated]
    with ThreadPoolExecutor(max_workers=nt) as ex:
        return list(ex.map(
            lambda q: top_k_search(store, q, params, threads=1), validated))
