"""Least-squares gradient boosting of regression trees over binary features."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from hypograph import _kernels
from hypograph.fingerprint import HASH_VERSION, FeatureMatrix

# gains within this fraction of the node's residual sum of squares count as ties
TIE_RTOL = 1e-12


@dataclass
class TreeNode:
    feature: int | None = None
    left: "TreeNode | None" = None  # feature absent
    right: "TreeNode | None" = None  # feature present
    value: float = 0.0
    n_samples: int = 0
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def evaluate(self, features) -> float:
        node = self
        while node.feature is not None:
            node = node.right if node.feature in features else node.left
        return node.value

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def splits(self) -> Iterable["TreeNode"]:
        if not self.is_leaf:
            yield self
            yield from self.left.splits()
            yield from self.right.splits()

    def to_json(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "feature": str(self.feature),
            "gain": self.gain,
            "n": self.n_samples,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TreeNode":
        if "feature" not in obj:
            return cls(value=float(obj["value"]), n_samples=int(obj.get("n", 0)))
        return cls(
            feature=int(obj["feature"]),
            left=cls.from_json(obj["left"]),
            right=cls.from_json(obj["right"]),
            n_samples=int(obj.get("n", 0)),
            gain=float(obj.get("gain", 0.0)),
        )


@dataclass(frozen=True)
class BoostConfig:
    stages: int = 200
    shrinkage: float = 0.1
    max_depth: int = 3
    min_leaf: int = 5
    seed: int = 0
    subsample: float = 1.0
    colsample: float = 1.0

    def __post_init__(self):
        if self.stages < 0:
            raise ValueError("stages must be >= 0")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")
        if self.max_depth < 0 or self.min_leaf < 1:
            raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
        if not (0.0 < self.subsample <= 1.0 and 0.0 < self.colsample <= 1.0):
            raise ValueError("subsample and colsample must lie in (0, 1]")


@dataclass
class BoostedEnsemble:
    c0: float
    stages: list[tuple[TreeNode, float]] = field(default_factory=list)
    config: BoostConfig = field(default_factory=BoostConfig)
    n_train: int = 0
    train_mse: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "c0": self.c0,
            "gamma": self.config.shrinkage,
            "hash_version": HASH_VERSION,
            "config": asdict(self.config),
            "n_train": self.n_train,
            "train_mse": self.train_mse,
            "trees": [{"gamma": g, "tree": t.to_json()} for t, g in self.stages],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BoostedEnsemble":
        return cls(
            c0=float(obj["c0"]),
            stages=[(TreeNode.from_json(s["tree"]), float(s["gamma"])) for s in obj["trees"]],
            config=BoostConfig(**obj["config"]),
            n_train=int(obj.get("n_train", 0)),
            train_mse=[float(x) for x in obj.get("train_mse", [])],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


class _SplitData:
    """Candidate columns in CSC form, restricted to ones that can ever split.

    Columns with support below ``min_leaf`` (or above ``n - min_leaf``) can
    never produce a legal split; among identical columns only the lowest
    feature id is kept, which is the one the tie-break would choose anyway.
    """

    def __init__(self, X: FeatureMatrix, min_leaf: int):
        colptr, rowidx = X.csc()
        n = X.n_samples
        support = np.diff(colptr)
        keep = []
        seen: set[bytes] = set()
        for j in np.flatnonzero((support >= min_leaf) & (support <= n - min_leaf)):
            key = rowidx[colptr[j]:colptr[j + 1]].tobytes()
            if key in seen:
                continue
            seen.add(key)
            keep.append(j)
        keep = np.asarray(keep, dtype=np.int64)
        lengths = support[keep] if len(keep) else np.zeros(0, dtype=np.int64)
        self.colptr = np.zeros(len(keep) + 1, dtype=np.int64)
        np.cumsum(lengths, out=self.colptr[1:])
        self.rowidx = (
            np.concatenate([rowidx[colptr[j]:colptr[j + 1]] for j in keep]).astype(np.int32)
            if len(keep)
            else np.zeros(0, dtype=np.int32)
        )
        self.colidx = np.repeat(np.arange(len(keep), dtype=np.int32), lengths)
        self.feature_ids = [int(X.vocab[j]) for j in keep]
        self.n_samples = n

    @property
    def n_columns(self) -> int:
        return len(self.feature_ids)

    def rows_with(self, col: int) -> np.ndarray:
        return self.rowidx[self.colptr[col]:self.colptr[col + 1]]


def _grow(
    data: _SplitData,
    residuals: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    min_leaf: int,
    column_mask: np.ndarray | None = None,
) -> TreeNode:
    n = data.n_samples
    node_of = np.full(n, -1, dtype=np.int32)
    node_of[rows] = 0
    root = TreeNode()
    active = [root]
    final_owner = np.full(n, -1, dtype=np.int64)
    leaf_nodes: list[TreeNode] = []

    def close(node: TreeNode, members: np.ndarray) -> None:
        final_owner[members] = len(leaf_nodes)
        leaf_nodes.append(node)

    for depth in range(max_depth + 1):
        if not active:
            break
        n_active = len(active)
        owned = node_of >= 0
        node_n = np.bincount(node_of[owned], minlength=n_active)
        node_sum = np.bincount(node_of[owned], weights=residuals[owned], minlength=n_active)
        node_ss = np.bincount(node_of[owned], weights=residuals[owned] ** 2, minlength=n_active)
        for a, node in enumerate(active):
            node.n_samples = int(node_n[a])
        if depth == max_depth or data.n_columns == 0:
            for a, node in enumerate(active):
                close(node, np.flatnonzero(node_of == a))
            break
        counts, sums = _kernels.split_stats(
            data.colptr, data.rowidx, data.colidx, node_of, residuals, n_active
        )
        next_active: list[TreeNode] = []
        next_owner = np.full(n, -1, dtype=np.int32)
        for a, node in enumerate(active):
            members = np.flatnonzero(node_of == a)
            n_node = int(node_n[a])
            s_node = float(node_sum[a])
            n_right = counts[:, a]
            n_left = n_node - n_right
            legal = (n_right >= min_leaf) & (n_left >= min_leaf)
            if column_mask is not None:
                legal &= column_mask
            if n_node < 2 * min_leaf or not legal.any():
                close(node, members)
                continue
            s_right = sums[:, a]
            s_left = s_node - s_right
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = s_left**2 / n_left + s_right**2 / n_right - s_node**2 / n_node
            gain = np.where(legal, gain, -np.inf)
            best = float(gain.max())
            tol = TIE_RTOL * float(node_ss[a])
            if not best > tol:
                close(node, members)
                continue
            col = int(np.flatnonzero(gain >= best - tol)[0])
            node.feature = data.feature_ids[col]
            node.gain = float(gain[col])
            node.left, node.right = TreeNode(), TreeNode()
            present = np.zeros(n, dtype=bool)
            present[data.rows_with(col)] = True
            go_right = members[present[members]]
            go_left = members[~present[members]]
            next_owner[go_left] = len(next_active)
            next_active.append(node.left)
            next_owner[go_right] = len(next_active)
            next_active.append(node.right)
        active = next_active
        node_of = next_owner

    if leaf_nodes:
        assigned = final_owner >= 0
        leaf_n = np.bincount(final_owner[assigned], minlength=len(leaf_nodes))
        leaf_sum = np.bincount(final_owner[assigned], weights=residuals[assigned], minlength=len(leaf_nodes))
        for k, leaf in enumerate(leaf_nodes):
            leaf.n_samples = int(leaf_n[k])
            leaf.value = float(leaf_sum[k] / leaf_n[k]) if leaf_n[k] else 0.0
    return root


def fit_tree(
    X: FeatureMatrix,
    residuals: Sequence[float],
    max_depth: int = 3,
    min_leaf: int = 5,
    rows: Sequence[int] | None = None,
) -> TreeNode:
    """Greedy squared-error CART over presence bits.

    Each split maximizes the reduction in residual sum of squares; ties go to
    the lowest feature id. Growth stops at ``max_depth``, when no split keeps
    ``min_leaf`` samples per side, or when the best gain is zero.
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    if len(residuals) != X.n_samples or len(residuals) < 1:
        raise ValueError("residuals must have one entry per row (at least one row)")
    rows = np.arange(X.n_samples) if rows is None else np.asarray(rows, dtype=np.int64)
    return _grow(_SplitData(X, min_leaf), residuals, rows, max_depth, min_leaf)


def _presence_lookup(X: FeatureMatrix):
    colptr, rowidx = X.csc()
    cache: dict[int, np.ndarray] = {}

    def presence(fid: int) -> np.ndarray:
        if fid not in cache:
            mask = np.zeros(X.n_samples, dtype=bool)
            j = X.feature_index(fid)
            if j is not None:
                mask[rowidx[colptr[j]:colptr[j + 1]]] = True
            cache[fid] = mask
        return cache[fid]

    return presence


def _tree_outputs(tree: TreeNode, n: int, presence) -> np.ndarray:
    out = np.empty(n, dtype=np.float64)
    stack = [(tree, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        mask = presence(node.feature)[idx]
        stack.append((node.right, idx[mask]))
        stack.append((node.left, idx[~mask]))
    return out


def fit_ensemble(X: FeatureMatrix, y: Sequence[float], config: BoostConfig | None = None) -> BoostedEnsemble:
    """Stagewise least-squares boosting with constant shrinkage."""
    config = config or BoostConfig()
    y = np.asarray(y, dtype=np.float64)
    if X.n_samples == 0 or len(y) == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(y) != X.n_samples:
        raise ValueError(f"{len(y)} targets for {X.n_samples} rows")
    if len(y) < 2:
        raise ValueError("need at least two samples to train")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    n = len(y)
    c0 = math.fsum(y.tolist()) / n
    pred = np.full(n, c0)
    ensemble = BoostedEnsemble(c0=c0, config=config, n_train=n)
    ensemble.train_mse.append(float(np.mean((y - pred) ** 2)))
    data = _SplitData(X, config.min_leaf)
    presence = _presence_lookup(X)
    rng = np.random.default_rng(config.seed)
    gamma = config.shrinkage
    for _ in range(config.stages):
        residuals = y - pred
        rows = np.arange(n)
        if config.subsample < 1.0:
            k = max(1, int(round(config.subsample * n)))
            rows = np.sort(rng.choice(n, size=k, replace=False))
        mask = None
        if config.colsample < 1.0 and data.n_columns:
            mask = rng.random(data.n_columns) < config.colsample
        tree = _grow(data, residuals, rows, config.max_depth, config.min_leaf, mask)
        pred = pred + gamma * _tree_outputs(tree, n, presence)
        ensemble.stages.append((tree, gamma))
        ensemble.train_mse.append(float(np.mean((y - pred) ** 2)))
    return ensemble


def stage_contributions(e: BoostedEnsemble, features) -> list[float]:
    return [gamma * tree.evaluate(features) for tree, gamma in e.stages]


def predict(e: BoostedEnsemble, features) -> float:
    """``c0`` plus shrunken stage outputs, summed left to right."""
    features = features if isinstance(features, (set, frozenset)) else set(features)
    total = e.c0
    for tree, gamma in e.stages:
        total = total + gamma * tree.evaluate(features)
    return total


def predict_matrix(e: BoostedEnsemble, X: FeatureMatrix) -> np.ndarray:
    """Vectorized ``predict`` over all rows; same summation order."""
    presence = _presence_lookup(X)
    pred = np.full(X.n_samples, e.c0)
    for tree, gamma in e.stages:
        pred = pred + gamma * _tree_outputs(tree, X.n_samples, presence)
    return pred


def importances(e: BoostedEnsemble, X: FeatureMatrix | None = None) -> dict[int, float]:
    """Split-gain importance: sum of (node share of samples) x variance reduction, normalized.

    Shrinkage does not weight the gains. Returns an empty table when no tree
    ever split.
    """
    n = e.n_train or (X.n_samples if X is not None else 0)
    raw: dict[int, float] = {}
    for tree, _ in e.stages:
        for node in tree.splits():
            raw[node.feature] = raw.get(node.feature, 0.0) + node.gain / n
    total = math.fsum(raw.values())
    if not raw or total <= 0:
        return {}
    return {fid: raw[fid] / total for fid in sorted(raw)}


def ranked_features(table: dict[int, float]) -> list[int]:
    """Feature ids by descending importance, lowest id first among equals."""
    return sorted(table, key=lambda f: (-table[f], f))
