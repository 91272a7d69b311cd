"""Operator command line: build stores, query, evaluate, compare fold AUCs.

Exit codes: 0 success, 1 usage error, 2 domain error. Diagnostics go to
stderr; results go to stdout (machine-parseable with --json). An optional
config file supplies key=value defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .crossval import report_to_json, run_experiment, write_roc_csv
from .knn import SearchParams, top_k_search
from .service import serve
from .stats import welch_ttest
from .store import RecordMeta, StoreError, open_store, write_store
from .vote import majority_vote


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are 1
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="cxrsearch",
                     description="Feature-store search and evaluation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="assemble a feature store",
                       parents=[_common()])
    p.add_argument("--meta", required=True,
                   help="CSV of record_id,label,source (sidecar layout with "
                        "a row column also accepted)")
    p.add_argument("--vectors", required=True,
                   help=".npy matrix, CSV of float rows, or directory of "
                        "<record_id>.npy files")
    p.add_argument("--out", required=True, help="output .cxrf path")

    p = sub.add_parser("query", help="top-K search for one vector",
                       parents=[_common()])
    p.add_argument("--store", required=True)
    p.add_argument("--k", type=int, default=11)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--vector", help="comma-separated floats")
    src.add_argument("--vector-file", help=".npy or text file of floats")

    p = sub.add_parser("evaluate", help="cross-validated AUC for one method",
                       parents=[_common()])
    p.add_argument("--store", required=True)
    p.add_argument("--method", required=True,
                   choices=["image_search", "random_forest", "rf"])
    p.add_argument("--k", type=int, help="neighbors for image_search")
    p.add_argument("--trees", type=int, help="tree count for random_forest")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--exclude-self", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="mask each validation fold out of its own "
                        "candidate pool (default on)")

    p = sub.add_parser("ttest",
                       help="two-tailed unequal-variance t-test on two "
                            "columns of numbers",
                       parents=[_common()])
    p.add_argument("a_csv")
    p.add_argument("b_csv")
    p.add_argument("--a-col", help="column name when a_csv has a header")
    p.add_argument("--b-col", help="column name when b_csv has a header")

    p = sub.add_parser("serve", help="run the HTTP query service",
                       parents=[_common()])
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--image-dir")
    p.add_argument("--extractor-url")

    return parser


def _common() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--json", action="store_true",
                        help="emit a JSON document on stdout")
    shared.add_argument("--config",
                        help="key=value file supplying flag defaults")
    return shared


_INT_KEYS = {"k", "trees", "folds", "seed", "port"}
_BOOL_KEYS = {"exclude_self", "json"}


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    if not args.config:
        return
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for line in Path(args.config).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in explicit or not hasattr(args, key):
            continue
        value: object = raw
        if key in _BOOL_KEYS:
            value = raw.lower() in ("1", "true", "yes", "on")
        elif key in _INT_KEYS:
            value = int(raw)
        setattr(args, key, value)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, argv)
        handler = {
            "build": cmd_build,
            "query": cmd_query,
            "evaluate": cmd_evaluate,
            "ttest": cmd_ttest,
            "serve": cmd_serve,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, StoreError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _read_build_meta(path: str) -> list[RecordMeta]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty metadata CSV")
    header, *body = rows
    if header == ["row", "record_id", "label", "source"]:
        body = [r[1:] for r in body]
    elif header != ["record_id", "label", "source"]:
        raise ValueError(f"{path}: malformed CSV header {header}")
    meta = []
    for r in body:
        if len(r) != 3:
            raise ValueError(f"{path}: malformed CSV line {r}")
        meta.append(RecordMeta(record_id=r[0], label=int(r[1]), source=r[2]))
    return meta


def _read_vectors(path: str, meta: list[RecordMeta]) -> np.ndarray:
    p = Path(path)
    if p.is_dir():
        return np.stack([np.load(p / f"{m.record_id}.npy") for m in meta])
    if p.suffix == ".npy":
        return np.load(p)
    return np.loadtxt(p, delimiter=",", ndmin=2)


def cmd_build(args) -> int:
    meta = _read_build_meta(args.meta)
    vectors = np.asarray(_read_vectors(args.vectors, meta), dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(meta):
        raise ValueError(
            f"count mismatch: {len(meta)} metadata rows, "
            f"{vectors.shape[0]} vectors")
    write_store(list(zip(meta, vectors)), args.out)
    store = open_store(args.out)
    neg, pos = store.class_counts()
    payload = {
        "config": {"meta": args.meta, "vectors": args.vectors,
                   "out": args.out},
        "n_records": store.n_records,
        "dim": store.dim,
        "class_counts": {"positive": pos, "negative": neg},
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(f"wrote {args.out}: {store.n_records} records, "
              f"dim {store.dim}, {pos} positive / {neg} negative")
    return 0


def _parse_vector(args) -> np.ndarray:
    if args.vector is not None:
        return np.asarray([float(x) for x in args.vector.split(",")],
                          dtype=np.float32)
    p = Path(args.vector_file)
    if p.suffix == ".npy":
        return np.load(p).astype(np.float32).reshape(-1)
    text = p.read_text(encoding="utf-8").replace(",", " ").split()
    return np.asarray([float(x) for x in text], dtype=np.float32)


def cmd_query(args) -> int:
    store = open_store(args.store)
    vector = _parse_vector(args)
    neighbors = top_k_search(store, vector, SearchParams(k=args.k))
    vote = majority_vote(neighbors)
    if args.json:
        print(json.dumps({
            "config": {"store": args.store, "k": args.k},
            "neighbors": [
                {"rank": i, "record_id": store.meta[n.index].record_id,
                 "dist2": n.dist2, "label": n.label}
                for i, n in enumerate(neighbors, start=1)
            ],
            "vote": {"score": vote.score, "decision": vote.decision,
                     "k": vote.k, "positives": vote.positives},
        }, sort_keys=True, indent=2))
    else:
        print(f"{'rank':>4}  {'record_id':<24} {'dist2':>14}  label")
        for i, n in enumerate(neighbors, start=1):
            print(f"{i:>4}  {store.meta[n.index].record_id:<24} "
                  f"{n.dist2:>14.6f}  {n.label}")
        decision = "positive" if vote.decision else "negative"
        print(f"vote: {vote.positives}/{vote.k} positive, "
              f"score {vote.score:.5f}, decision {decision}")
    return 0


def cmd_evaluate(args) -> int:
    method = "random_forest" if args.method == "rf" else args.method
    if method == "image_search":
        if args.k is None:
            raise UsageError("image_search requires --k")
        param = args.k
    else:
        if args.trees is None:
            raise UsageError("random_forest requires --trees")
        param = args.trees
    store = open_store(args.store)
    report = run_experiment(store, folds=args.folds, seed=args.seed,
                            method=method, param=param,
                            exclude_queries=args.exclude_self)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = report_to_json(report)
    (out_dir / "report.json").write_text(doc, encoding="utf-8")
    for fold in report.per_fold:
        write_roc_csv(fold, out_dir / f"roc_fold_{fold.fold_id:02d}.csv")
    if args.json:
        print(doc, end="")
    else:
        for fold in report.per_fold:
            print(f"fold {fold.fold_id:2d}: AUC {fold.auc:.5f}")
        print(f"mean AUC: {report.mean_auc:.5f}")
        print(f"report written to {out_dir / 'report.json'}",
              file=sys.stderr)
    return 0


def _read_column(path: str, column: str | None) -> list[float]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty file")
    try:
        header_is_numeric = all(_is_float(x) for x in rows[0])
    except IndexError:
        header_is_numeric = False
    if column is not None:
        if header_is_numeric:
            raise ValueError(f"{path}: no header row to look up {column!r}")
        if column not in rows[0]:
            raise ValueError(f"{path}: no column named {column!r}")
        idx = rows[0].index(column)
        body = rows[1:]
    else:
        idx = 0
        body = rows if header_is_numeric else rows[1:]
        if body and len(body[0]) != 1:
            raise ValueError(
                f"{path}: multiple columns; pick one with --a-col/--b-col")
    try:
        return [float(r[idx]) for r in body]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed number: {exc}") from None


def _is_float(x: str) -> bool:
    try:
        float(x)
        return True
    except ValueError:
        return False


def cmd_ttest(args) -> int:
    a = _read_column(args.a_csv, args.a_col)
    b = _read_column(args.b_csv, args.b_col)
    result = welch_ttest(a, b)
    if args.json:
        print(json.dumps({
            "config": {"a": args.a_csv, "b": args.b_csv,
                       "a_col": args.a_col, "b_col": args.b_col},
            "t_stat": result.t_stat,
            "dof": result.dof,
            "p_value": result.p_value,
        }, sort_keys=True, indent=2))
    else:
        print(f"t = {result.t_stat:.6f}")
        print(f"dof = {result.dof:.6f}")
        print(f"p = {result.p_value:.6e}")
    return 0


def cmd_serve(args) -> int:
    extractor_url = args.extractor_url or os.environ.get("EXTRACTOR_URL")
    serve(args.store, host=args.host, port=args.port,
          image_dir=args.image_dir, extractor_url=extractor_url)
    return 0


if __name__ == "__main__":
    sys.exit(main())
