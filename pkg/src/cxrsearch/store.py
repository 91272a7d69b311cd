"""On-disk feature store: a flat float32 matrix plus a CSV metadata sidecar.

File layout (``.cxrf``): 8-byte magic ``CXRFEAT\\0``, u32 LE format version
(currently 1), u64 LE record count, u32 LE dimension, then the row-major
float32 LE payload with no padding. Metadata lives next to it in
``<name>.meta.csv`` with columns ``row,record_id,label,source``.

Stores are written once and never mutated; readers share them freely.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"CXRFEAT\0"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIQI")  # magic, version, n_records, dim

SOURCES = ("mimic-cxr", "chexpert", "chestxray14", "synthetic")


class StoreError(Exception):
    """A feature store file is malformed or inconsistent with its sidecar."""


@dataclass(frozen=True)
class RecordMeta:
    """Per-record metadata aligned with one row of the vector matrix."""

    record_id: str
    label: int  # 1 = pneumothorax, 0 = negative
    source: str

    def validate(self) -> None:
        if not self.record_id:
            raise ValueError("record_id must be nonempty")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.source not in SOURCES:
            raise ValueError(
                f"unknown source {self.source!r}, expected one of {SOURCES}"
            )


class FeatureStore:
    """Read-only view over n_records x dim float32 vectors and their metadata.

    ``vectors`` is either a memory map (disk-backed stores) or a plain
    ndarray (in-memory stores built for tests and synthetic data). Rows are
    never copied on access.
    """

    def __init__(self, vectors: np.ndarray, meta: Sequence[RecordMeta], *,
                 path: str | None = None):
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2D matrix")
        if len(meta) != vectors.shape[0]:
            raise StoreError(
                f"meta/vector count mismatch: {len(meta)} metadata rows for "
                f"{vectors.shape[0]} vectors"
            )
        self.vectors = vectors
        self.meta = list(meta)
        self.path = path
        self.labels = np.array([m.label for m in self.meta], dtype=np.uint8)
        self._id_index: dict[str, int] | None = None

    @property
    def n_records(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def get_vector(self, i: int) -> np.ndarray:
        """Row ``i`` as a read-only view; raises IndexError out of range."""
        if not 0 <= i < self.n_records:
            raise IndexError(
                f"record index {i} out of range for store of {self.n_records}"
            )
        return self.vectors[i]

    def index_of(self, record_id: str) -> int:
        """Row index for a record_id; raises KeyError if absent."""
        if self._id_index is None:
            self._id_index = {m.record_id: i for i, m in enumerate(self.meta)}
        return self._id_index[record_id]

    def class_counts(self) -> tuple[int, int]:
        """(negatives, positives) over the whole store."""
        pos = int(self.labels.sum())
        return self.n_records - pos, pos

    @classmethod
    def from_arrays(cls, vectors: np.ndarray,
                    meta: Sequence[RecordMeta]) -> "FeatureStore":
        """In-memory store over an existing array, validated like a file."""
        arr = np.ascontiguousarray(vectors, dtype=np.float32)
        _validate_payload(arr)
        _validate_meta(meta)
        arr.flags.writeable = False
        return cls(arr, meta)


def meta_sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.csv")


class StoreWriter:
    """Streaming writer so large stores never have to sit in memory at once.

    Usage: construct, ``append`` batches, then ``close``. The header is
    finalized on close; an interrupted write leaves a file that fails
    validation on open.
    """

    def __init__(self, path: str | Path, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.path = Path(path)
        self.dim = dim
        self.n_written = 0
        self._ids: set[str] = set()
        self._vec_file = open(self.path, "wb")
        self._vec_file.write(HEADER.pack(MAGIC, FORMAT_VERSION, 0, dim))
        self._meta_file = open(meta_sidecar_path(self.path), "w",
                               encoding="utf-8", newline="")
        self._meta_writer = csv.writer(self._meta_file)
        self._meta_writer.writerow(["row", "record_id", "label", "source"])

    def append(self, meta: Sequence[RecordMeta], vectors: np.ndarray) -> None:
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        if vectors.ndim == 1:
            vectors = vectors.reshape(1, -1)
        if vectors.shape[1] != self.dim:
            raise ValueError(
                f"dimension mismatch: writer expects {self.dim}, "
                f"got {vectors.shape[1]}"
            )
        if len(meta) != vectors.shape[0]:
            raise ValueError(
                f"batch has {len(meta)} metadata rows for "
                f"{vectors.shape[0]} vectors"
            )
        if not np.isfinite(vectors).all():
            raise ValueError("non-finite value in vector batch")
        for m in meta:
            m.validate()
            if m.record_id in self._ids:
                raise ValueError(f"duplicate record_id {m.record_id!r}")
            self._ids.add(m.record_id)
        for row, m in enumerate(meta, start=self.n_written):
            self._meta_writer.writerow([row, m.record_id, m.label, m.source])
        self._vec_file.write(_as_le(vectors).tobytes())
        self.n_written += vectors.shape[0]

    def close(self) -> None:
        if self.n_written == 0:
            self._abort()
            raise ValueError("empty store")
        self._vec_file.seek(0)
        self._vec_file.write(
            HEADER.pack(MAGIC, FORMAT_VERSION, self.n_written, self.dim))
        self._vec_file.close()
        self._meta_file.close()

    def _abort(self) -> None:
        self._vec_file.close()
        self._meta_file.close()
        self.path.unlink(missing_ok=True)
        meta_sidecar_path(self.path).unlink(missing_ok=True)

    def __enter__(self) -> "StoreWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        else:
            self._abort()


def write_store(records: Iterable[tuple[RecordMeta, np.ndarray]],
                path: str | Path) -> None:
    """Write ``(meta, vector)`` pairs to ``path`` plus its metadata sidecar.

    All vectors must share one dimension, contain only finite values, and
    carry unique record ids; violating any of these raises ValueError before
    anything usable is left on disk.
    """
    records = list(records)
    if not records:
        raise ValueError("empty store")
    first = np.asarray(records[0][1])
    writer = StoreWriter(path, dim=first.shape[-1] if first.ndim else 1)
    try:
        for m, vec in records:
            vec = np.asarray(vec, dtype=np.float32)
            if vec.ndim != 1:
                raise ValueError(
                    f"record {m.record_id!r}: vector must be 1-D")
            if vec.shape[0] != writer.dim:
                raise ValueError(
                    f"dimension mismatch: record {m.record_id!r} has dim "
                    f"{vec.shape[0]}, expected {writer.dim}")
            writer.append([m], vec.reshape(1, -1))
    except BaseException:
        writer._abort()
        raise
    writer.close()


def open_store(path: str | Path) -> FeatureStore:
    """Open a store read-only; vectors are memory-mapped, not loaded."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(HEADER.size)
    if len(header) < HEADER.size:
        raise StoreError(f"{path}: truncated header")
    magic, version, n_records, dim = HEADER.unpack(header)
    if magic != MAGIC:
        raise StoreError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreError(f"{path}: unsupported format version {version}")
    if dim < 1:
        raise StoreError(f"{path}: invalid dim {dim}")
    if n_records == 0:
        raise StoreError(f"{path}: empty store")
    expected = HEADER.size + n_records * dim * 4
    actual = path.stat().st_size
    if actual < expected:
        raise StoreError(
            f"{path}: truncated payload ({actual} bytes, expected {expected})")
    if actual > expected:
        raise StoreError(
            f"{path}: trailing bytes ({actual} bytes, expected {expected})")
    vectors = np.memmap(path, dtype="<f4", mode="r", offset=HEADER.size,
                        shape=(n_records, dim))
    meta = read_meta(meta_sidecar_path(path))
    if len(meta) != n_records:
        raise StoreError(
            f"{path}: meta/vector count mismatch: sidecar has {len(meta)} "
            f"rows, header says {n_records}")
    return FeatureStore(vectors, meta, path=str(path))


def read_meta(path: str | Path) -> list[RecordMeta]:
    """Parse a metadata sidecar. ``#``-prefixed lines are comments."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(io.StringIO("".join(lines)))
    try:
        header = next(reader)
    except StopIteration:
        raise StoreError(f"{path}: empty metadata sidecar") from None
    if header != ["row", "record_id", "label", "source"]:
        raise StoreError(f"{path}: bad sidecar header {header}")
    meta: list[RecordMeta] = []
    seen: set[str] = set()
    for fields in reader:
        if len(fields) != 4:
            raise StoreError(f"{path}: malformed sidecar line {fields}")
        row_s, record_id, label_s, source = fields
        if int(row_s) != len(meta):
            raise StoreError(
                f"{path}: row column not consecutive at line {fields}")
        if record_id in seen:
            raise StoreError(f"{path}: duplicate record_id {record_id!r}")
        seen.add(record_id)
        m = RecordMeta(record_id=record_id, label=int(label_s), source=source)
        try:
            m.validate()
        except ValueError as exc:
            raise StoreError(f"{path}: {exc}") from None
        meta.append(m)
    return meta


def _as_le(arr: np.ndarray) -> np.ndarray:
    return arr.astype("<f4", copy=False)


def _validate_payload(arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise ValueError("vectors must be a 2-D matrix")
    if arr.shape[0] == 0:
        raise ValueError("empty store")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite value in vectors")


def _validate_meta(meta: Sequence[RecordMeta]) -> None:
    seen: set[str] = set()
    for m in meta:
        m.validate()
        if m.record_id in seen:
            raise ValueError(f"duplicate record_id {m.record_id!r}")
        seen.add(m.record_id)
