"""Export embeddings to the retrieval engine's store format.

Writes the `.cxrf` layout directly (8-byte magic ``CXRFEAT\\0``, u32 LE
version 1, u64 LE record count, u32 LE dim, float32 LE row-major payload)
plus the ``.meta.csv`` sidecar, with an extractor version comment line the
reader skips.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

STORE_MAGIC = b"CXRFEAT\0"
STORE_VERSION = 1
HEADER = struct.Struct("<8sIQI")


def export_store(matrix: np.ndarray, ids: list[str],
                 manifest_rows: list[tuple[str, int, str]],
                 out: str | Path, *, extractor_note: str = "") -> None:
    """Write embeddings + manifest labels as a store the engine can open.

    ``manifest_rows`` are (path, label, source); every embedded id must
    match its manifest row in order.
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not (len(ids) == matrix.shape[0] == len(manifest_rows)):
        raise ValueError(
            f"count mismatch: {matrix.shape[0]} embeddings, {len(ids)} ids, "
            f"{len(manifest_rows)} manifest rows")
    if matrix.shape[0] == 0:
        raise ValueError("nothing to export")
    for i, ((path, _, _), embedded_id) in enumerate(zip(manifest_rows, ids)):
        if path != embedded_id:
            raise ValueError(
                f"row {i}: manifest path {path!r} does not match embedded "
                f"image {embedded_id!r}")
    assert np.isfinite(matrix).all(), "non-finite value in embeddings"

    out = Path(out)
    with open(out, "wb") as fh:
        fh.write(HEADER.pack(STORE_MAGIC, STORE_VERSION,
                             matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.astype("<f4", copy=False).tobytes())
    with open(Path(str(out) + ".meta.csv"), "w", encoding="utf-8",
              newline="") as fh:
        if extractor_note:
            fh.write(f"# {extractor_note}\n")
        writer = csv.writer(fh)
        writer.writerow(["row", "record_id", "label", "source"])
        for row, (path, label, source) in enumerate(manifest_rows):
            writer.writerow([row, path, label, source])
