"""Dataset manifest assembly from per-source label tables.

Two labeling rules are supported, both restricted to frontal views:

- dataset1: pneumothorax-positive images vs. no-finding images; anything
  else is dropped.
- dataset2: pneumothorax-positive images vs. every other image.

Uncertain or blank label cells (CheXpert-style -1 or empty) count as
not-equal-to-1, so they never qualify as positive or as no-finding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

SOURCES = ("mimic-cxr", "chexpert", "chestxray14", "synthetic")
FORMATS = ("normalized", "chexpert", "chestxray14")

FRONTAL_VIEWS = {"frontal", "ap", "pa"}
LATERAL_VIEWS = {"lateral", "ll", "l"}


@dataclass(frozen=True)
class SourceTable:
    """One label file: where it came from and how to parse it."""

    source: str  # sidecar source tag
    fmt: str
    path: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown label format {self.fmt!r}")


@dataclass(frozen=True)
class LabeledImage:
    path: str
    frontal: bool
    pneumothorax: bool
    no_finding: bool
    source: str


@dataclass
class DatasetManifest:
    dataset_id: str  # "dataset1" | "dataset2"
    rows: list[tuple[str, int, str]]  # (image path, label, source)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def n_positive(self) -> int:
        return sum(1 for _, label, _ in self.rows if label == 1)

    @property
    def n_negative(self) -> int:
        return len(self.rows) - self.n_positive


def _is_one(cell: str) -> bool:
    cell = cell.strip()
    if not cell:
        return False
    try:
        return float(cell) == 1.0
    except ValueError:
        return False


def _require_columns(header: list[str], needed: Iterable[str],
                     path: str) -> None:
    missing = [c for c in needed if c not in header]
    if missing:
        raise ValueError(f"{path}: missing label columns {missing}")


def _parse_view(value: str, path: str) -> bool:
    view = value.strip().lower()
    if view in FRONTAL_VIEWS:
        return True
    if view in LATERAL_VIEWS:
        return False
    raise ValueError(f"{path}: unknown view metadata {value!r}")


def _read_normalized(table: SourceTable) -> Iterator[LabeledImage]:
    with open(table.path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames or [],
                         ["path", "view", "pneumothorax", "no_finding"],
                         table.path)
        for row in reader:
            yield LabeledImage(
                path=row["path"],
                frontal=_parse_view(row["view"], table.path),
                pneumothorax=_is_one(row["pneumothorax"]),
                no_finding=_is_one(row["no_finding"]),
                source=table.source,
            )


def _read_chexpert(table: SourceTable) -> Iterator[LabeledImage]:
    with open(table.path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames or [],
                         ["Path", "Frontal/Lateral", "Pneumothorax",
                          "No Finding"], table.path)
        for row in reader:
            yield LabeledImage(
                path=row["Path"],
                frontal=_parse_view(row["Frontal/Lateral"], table.path),
                pneumothorax=_is_one(row["Pneumothorax"]),
                no_finding=_is_one(row["No Finding"]),
                source=table.source,
            )


def _read_chestxray14(table: SourceTable) -> Iterator[LabeledImage]:
    with open(table.path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames or [],
                         ["Image Index", "Finding Labels", "View Position"],
                         table.path)
        for row in reader:
            findings = {f.strip() for f in row["Finding Labels"].split("|")}
            yield LabeledImage(
                path=row["Image Index"],
                frontal=_parse_view(row["View Position"], table.path),
                pneumothorax="Pneumothorax" in findings,
                no_finding=findings == {"No Finding"},
                source=table.source,
            )


_READERS = {
    "normalized": _read_normalized,
    "chexpert": _read_chexpert,
    "chestxray14": _read_chestxray14,
}


def build_manifest(tables: list[SourceTable],
                   dataset_id: str) -> DatasetManifest:
    """Apply the dataset inclusion rule over all source tables."""
    if dataset_id not in ("dataset1", "dataset2"):
        raise ValueError(f"dataset_id must be dataset1 or dataset2, "
                         f"got {dataset_id!r}")
    rows: list[tuple[str, int, str]] = []
    counts: dict[str, dict[str, int]] = {}
    for table in tables:
        per_source = counts.setdefault(table.source,
                                       {"positive": 0, "negative": 0})
        for image in _READERS[table.fmt](table):
            if not image.frontal:
                continue
            if image.pneumothorax:
                label = 1
            elif dataset_id == "dataset1":
                if not image.no_finding:
                    continue
                label = 0
            else:
                label = 0
            rows.append((image.path, label, image.source))
            per_source["positive" if label else "negative"] += 1
    return DatasetManifest(dataset_id=dataset_id, rows=rows, counts=counts)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "source"])
        writer.writerows(manifest.rows)


def read_manifest(path: str | Path) -> list[tuple[str, int, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "label", "source"]:
            raise ValueError(f"{path}: malformed manifest header {header}")
        return [(r[0], int(r[1]), r[2]) for r in reader]
