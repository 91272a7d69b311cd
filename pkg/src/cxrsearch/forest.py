"""Random Forest baseline trained on stored feature vectors.

CART-style trees with axis-aligned splits chosen by weighted Gini
impurity. Sample weights combine 'balanced' class weights with bootstrap
multiplicities. Everything is deterministic given (data, t, seed): each
tree derives its own child seed, nodes are expanded in a fixed preorder,
and split ties resolve to the lowest feature index then lowest threshold.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

FOREST_MAGIC = b"CXRF-RF\0"
FOREST_VERSION = 1

_LEAF = -1


@dataclass
class DecisionTree:
    """Flat node arrays; feature[i] == -1 marks a leaf holding class masses."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    mass_neg: np.ndarray  # float64, weighted class mass at leaves
    mass_pos: np.ndarray  # float64

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    dim: int
    class_weights: tuple[float, float]  # (w_neg, w_pos)
    seed: int


def balanced_weights(labels: Sequence[int] | np.ndarray) -> tuple[float, float]:
    """Per-class weights n_total / (2 * n_class); total weight stays n_total."""
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != y.size:
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("single-class input: both classes required")
    n = y.size
    return n / (2.0 * n_neg), n / (2.0 * n_pos)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, tree_index])
    return np.random.Generator(np.random.PCG64(ss))


def best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray,
               ids: np.ndarray, feats: np.ndarray):
    """Best (cost, feature, threshold) over candidate features, or None.

    Thresholds are midpoints between consecutive distinct sorted values.
    Cost is the summed weighted Gini of the two children; ties go to the
    lowest feature index, then the lowest threshold.
    """
    best: tuple[float, int, float] | None = None
    for f in feats:
        v = X[ids, f].astype(np.float64, copy=False)
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cuts = np.flatnonzero(vs[1:] != vs[:-1])
        if cuts.size == 0:
            continue
        ws = w[ids][order]
        ys = y[ids][order]
        wpos = np.cumsum(ws * ys)[cuts]
        wneg = np.cumsum(ws * (1.0 - ys))[cuts]
        total_pos = np.sum(ws * ys)
        total_neg = np.sum(ws * (1.0 - ys))
        rpos = total_pos - wpos
        rneg = total_neg - wneg
        cost = (2.0 * wpos * wneg / (wpos + wneg)
                + 2.0 * rpos * rneg / (rpos + rneg))
        j = int(np.argmin(cost))  # first min = lowest threshold
        thr = (vs[cuts[j]] + vs[cuts[j] + 1]) / 2.0
        if thr >= vs[cuts[j] + 1]:  # guard against midpoint rounding up
            thr = float(vs[cuts[j]])
        cand = (float(cost[j]), int(f), float(thr))
        if best is None or cand < best:
            best = cand
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray,
               root_ids: np.ndarray, n_feats: int,
               rng: np.random.Generator) -> DecisionTree:
    dim = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    mass_neg: list[float] = []
    mass_pos: list[float] = []

    # (ids, parent index, is_left); LIFO with right pushed first keeps
    # node expansion (and rng consumption) in left-first preorder.
    stack: list[tuple[np.ndarray, int, bool]] = [(root_ids, -1, False)]
    while stack:
        ids, parent, is_left = stack.pop()
        node = len(feature)
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        yl = y[ids]
        wl = w[ids]
        w_pos = float(wl[yl == 1].sum())
        w_neg = float(wl[yl == 0].sum())
        mass_neg.append(w_neg)
        mass_pos.append(w_pos)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        if w_pos == 0.0 or w_neg == 0.0 or w_pos + w_neg < 2.0:
            continue
        feats = rng.choice(dim, size=n_feats, replace=False)
        found = best_split(X, y, w, ids, feats)
        if found is None:
            continue
        _, f, thr = found
        go_left = X[ids, f].astype(np.float64, copy=False) <= thr
        feature[node] = f
        threshold[node] = thr
        mass_neg[node] = 0.0
        mass_pos[node] = 0.0
        stack.append((ids[~go_left], node, False))
        stack.append((ids[go_left], node, True))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        mass_neg=np.asarray(mass_neg, dtype=np.float64),
        mass_pos=np.asarray(mass_pos, dtype=np.float64),
    )


def train_forest(features: np.ndarray, labels: Sequence[int] | np.ndarray,
                 t: int, seed: int) -> ForestModel:
    """Train ``t`` trees on bootstrap resamples with balanced class weights."""
    X = np.asarray(features)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("features must be (n_samples, dim) matching labels")
    n, dim = X.shape
    if n < 2:
        raise ValueError(f"need >= 2 samples, got {n}")
    if t < 1:
        raise ValueError(f"need >= 1 tree, got {t}")
    w_neg, w_pos = balanced_weights(labels)
    cw = np.where(y == 1, w_pos, w_neg)
    n_feats = max(1, int(np.sqrt(dim)))
    trees = []
    for i in range(t):
        rng = _tree_rng(seed, i)
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        ids = np.flatnonzero(counts)
        w = counts.astype(np.float64) * cw
        trees.append(_grow_tree(X, y, w, ids, n_feats, rng))
    return ForestModel(trees=trees, dim=dim,
                       class_weights=(w_neg, w_pos), seed=seed)


def _tree_leaf_fractions(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    cur = np.zeros(X.shape[0], dtype=np.int64)
    active = tree.feature[cur] != _LEAF
    while active.any():
        node = cur[active]
        f = tree.feature[node]
        vals = X[np.flatnonzero(active), f].astype(np.float64, copy=False)
        nxt = np.where(vals <= tree.threshold[node],
                       tree.left[node], tree.right[node])
        cur[active] = nxt
        active = tree.feature[cur] != _LEAF
    pos = tree.mass_pos[cur]
    neg = tree.mass_neg[cur]
    return pos / (pos + neg)


def predict_proba_many(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probability per row: mean leaf fraction over trees."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(
            f"dimension mismatch: model dim {model.dim}, input {X.shape}")
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        acc += _tree_leaf_fractions(tree, X)
    return acc / len(model.trees)


def predict_proba(model: ForestModel, x: np.ndarray) -> float:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("x must be a single vector")
    return float(predict_proba_many(model, x.reshape(1, -1))[0])


def save_forest(model: ForestModel, path) -> None:
    """Serialize to the versioned binary blob format."""
    with open(path, "wb") as fh:
        fh.write(FOREST_MAGIC)
        fh.write(struct.pack("<IIIq", FOREST_VERSION, model.dim,
                             len(model.trees), model.seed))
        fh.write(struct.pack("<dd", *model.class_weights))
        for tree in model.trees:
            fh.write(struct.pack("<I", tree.n_nodes))
            fh.write(tree.feature.astype("<i4").tobytes())
            fh.write(tree.threshold.astype("<f8").tobytes())
            fh.write(tree.left.astype("<i4").tobytes())
            fh.write(tree.right.astype("<i4").tobytes())
            fh.write(tree.mass_neg.astype("<f8").tobytes())
            fh.write(tree.mass_pos.astype("<f8").tobytes())


def load_forest(path) -> ForestModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != FOREST_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:8]!r}")
    version, dim, n_trees, seed = struct.unpack_from("<IIIq", blob, 8)
    if version != FOREST_VERSION:
        raise ValueError(f"{path}: unsupported forest version {version}")
    w_neg, w_pos = struct.unpack_from("<dd", blob, 28)
    off = 44
    trees = []
    for _ in range(n_trees):
        (n_nodes,) = struct.unpack_from("<I", blob, off)
        off += 4

        def take(dtype, count, itemsize):
            nonlocal off
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off)
            off += count * itemsize
            return arr.copy()

        feature = take("<i4", n_nodes, 4)
        threshold = take("<f8", n_nodes, 8)
        left = take("<i4", n_nodes, 4)
        right = take("<i4", n_nodes, 4)
        mass_neg = take("<f8", n_nodes, 8)
        mass_pos = take("<f8", n_nodes, 8)
        trees.append(DecisionTree(feature, threshold, left, right,
                                  mass_neg, mass_pos))
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes in forest blob")
    return ForestModel(trees=trees, dim=dim, class_weights=(w_neg, w_pos),
                       seed=seed)
