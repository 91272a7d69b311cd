"""Extractor command line: manifests, batch extraction, HTTP sidecar."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .export import export_store
from .features import (ExtractConfig, FeatureExtractor, default_config,
                       extract_features)
from .manifest import SourceTable, build_manifest, read_manifest, write_manifest
from .service import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cxrextract")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("manifest", help="assemble a dataset manifest")
    p.add_argument("--dataset", required=True, choices=["1", "2"])
    p.add_argument("--chexpert", help="CheXpert train.csv")
    p.add_argument("--chestxray14", help="ChestX-ray14 Data_Entry_2017.csv")
    p.add_argument("--mimic-normalized",
                   help="MIMIC-CXR labels pre-joined to the normalized "
                        "path,view,pneumothorax,no_finding schema")
    p.add_argument("--normalized", action="append", default=[],
                   metavar="SOURCE=PATH",
                   help="extra normalized-schema table for SOURCE")
    p.add_argument("--out", required=True)

    p = sub.add_parser("extract", help="embed manifest images into a store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--weights", default=None,
                   help="'imagenet' (default), 'random', or a checkpoint "
                        "path")

    p = sub.add_parser("serve", help="run the embedding HTTP sidecar")
    p.add_argument("--port", type=int, default=8210)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--weights", default=None)

    return parser


def _tables(args) -> list[SourceTable]:
    tables = []
    if args.chexpert:
        tables.append(SourceTable("chexpert", "chexpert", args.chexpert))
    if args.chestxray14:
        tables.append(SourceTable("chestxray14", "chestxray14",
                                  args.chestxray14))
    if args.mimic_normalized:
        tables.append(SourceTable("mimic-cxr", "normalized",
                                  args.mimic_normalized))
    for spec in args.normalized:
        source, _, path = spec.partition("=")
        if not path:
            raise ValueError(f"--normalized needs SOURCE=PATH, got {spec!r}")
        tables.append(SourceTable(source, "normalized", path))
    if not tables:
        raise ValueError("no source label tables given")
    return tables


def cmd_manifest(args) -> int:
    manifest = build_manifest(_tables(args), f"dataset{args.dataset}")
    write_manifest(manifest, args.out)
    for source, c in manifest.counts.items():
        print(f"{source}: {c['positive']} positive / {c['negative']} negative")
    print(f"total: {manifest.n_positive} positive / "
          f"{manifest.n_negative} negative / {len(manifest.rows)} images")
    return 0


def cmd_extract(args) -> int:
    rows = read_manifest(args.manifest)
    config = ExtractConfig(batch_size=args.batch,
                           weights=args.weights
                           or default_config().weights)
    extractor = FeatureExtractor(config)
    matrix, ids = extract_features([path for path, _, _ in rows],
                                   extractor=extractor)
    embedded = set(ids)
    kept = [row for row in rows if row[0] in embedded]
    export_store(matrix, ids, kept, args.out,
                 extractor_note=f"extractor: cxrextract {__version__}; "
                                f"{extractor.config.describe()}")
    skipped = len(rows) - len(kept)
    print(f"wrote {args.out}: {len(kept)} records, dim {matrix.shape[1]}"
          + (f" ({skipped} undecodable skipped)" if skipped else ""))
    return 0


def cmd_serve(args) -> int:
    config = None
    if args.weights:
        config = ExtractConfig(weights=args.weights)
    serve(port=args.port, host=args.host, config=config)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"manifest": cmd_manifest,
                "extract": cmd_extract,
                "serve": cmd_serve}[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
