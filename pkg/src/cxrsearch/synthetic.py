"""Synthetic feature data for tests, benchmarks, and the evaluation runbook."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .store import FeatureStore, RecordMeta, StoreWriter


def make_blobs(n: int, dim: int, separation: float = 4.0,
               seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Two unit-variance Gaussian clusters with means ``separation`` apart.

    The offset sits on the first axis, so the Euclidean distance between
    class means is exactly ``separation`` (in per-dimension sigma units).
    Returns (vectors float32, labels uint8); classes are balanced, with
    negatives first.
    """
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    labels = np.zeros(n, dtype=np.uint8)
    labels[n - n_pos:] = 1
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    vectors[labels == 1, 0] += np.float32(separation)
    return vectors, labels


def blob_store(n: int, dim: int, separation: float = 4.0,
               seed: int = 0) -> FeatureStore:
    """In-memory two-cluster store."""
    vectors, labels = make_blobs(n, dim, separation, seed)
    meta = [RecordMeta(record_id=f"synth-{i:06d}", label=int(labels[i]),
                       source="synthetic")
            for i in range(n)]
    return FeatureStore.from_arrays(vectors, meta)


def write_blob_store(path: str | Path, n: int, dim: int,
                     separation: float = 4.0, seed: int = 0) -> None:
    """Two-cluster store written to disk."""
    vectors, labels = make_blobs(n, dim, separation, seed)
    with StoreWriter(path, dim=dim) as writer:
        meta = [RecordMeta(record_id=f"synth-{i:06d}", label=int(labels[i]),
                           source="synthetic")
                for i in range(n)]
        writer.append(meta, vectors)


def write_random_store(path: str | Path, n: int, dim: int, seed: int = 0,
                       batch: int = 16384) -> None:
    """Large store of standard-normal rows, streamed so RAM stays flat."""
    rng = np.random.default_rng(seed)
    with StoreWriter(path, dim=dim) as writer:
        written = 0
        while written < n:
            size = min(batch, n - written)
            vectors = rng.standard_normal((size, dim)).astype(np.float32)
            meta = [RecordMeta(record_id=f"rand-{written + i:07d}",
                               label=int(rng.integers(0, 2)),
                               source="synthetic")
                    for i in range(size)]
            writer.append(meta, vectors)
            written += size
