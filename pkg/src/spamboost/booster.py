"""Regularized second-order gradient-boosted trees for binary classification.

Each boosting round fits one CART to the current first/second derivatives of
the logistic loss. Split quality is the reduction of the regularized
objective

    gain = 1/2 * [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda)
                   - (G_L+G_R)^2/(H_L+H_R+lambda) ] - gamma

and the optimal leaf weight is -G/(H+lambda). Trees grow to ``max_depth``
accepting any positive-gain split, then negative nodes are pruned bottom-up
at the configured ``gamma``. Leaf weights carry the shrinkage factor ``eta``,
so ensemble prediction is a plain sum over trees plus the base score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from .dataset import Dataset

__all__ = [
    "Hyperparams",
    "Gradients",
    "Leaf",
    "Split",
    "Tree",
    "Model",
    "SplitCandidate",
    "ModelFormatError",
    "compute_gradients",
    "leaf_weight",
    "structure_score",
    "split_gain",
    "find_best_split",
    "build_tree",
    "prune",
    "train",
    "predict_raw",
    "predict_proba",
    "predict_label",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "spamboost-model"
MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file is malformed, truncated, or the wrong version."""


@dataclass(frozen=True)
class Hyperparams:
    """All tunable training knobs.

    Defaults are the tuned spam-detector configuration: eta 0.4, gamma 0.2,
    depth 24, column sample 0.75, 200 rounds with patience 10, and unit row
    subsample / min child weight. ``reg_lambda`` (L2 on leaf weights)
    defaults to 1.0, the customary value for this family of learners.
    """

    eta: float = 0.4
    gamma: float = 0.2
    reg_lambda: float = 1.0
    max_depth: int = 24
    colsample: float = 0.75
    subsample: float = 1.0
    min_child_weight: float = 1.0
    num_rounds: int = 200
    early_stopping_rounds: Optional[int] = 10
    base_score: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.reg_lambda < 0.0:
            raise ValueError(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not 0.0 < self.colsample <= 1.0:
            raise ValueError(f"colsample must be in (0, 1], got {self.colsample}")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError(f"subsample must be in (0, 1], got {self.subsample}")
        if self.min_child_weight < 0.0:
            raise ValueError(
                f"min_child_weight must be >= 0, got {self.min_child_weight}"
            )
        if self.num_rounds < 1:
            raise ValueError(f"num_rounds must be >= 1, got {self.num_rounds}")
        if self.early_stopping_rounds is not None and self.early_stopping_rounds < 1:
            raise ValueError(
                f"early_stopping_rounds must be >= 1 or None, got {self.early_stopping_rounds}"
            )
        if not 0.0 < self.base_score < 1.0:
            raise ValueError(
                f"base_score must be strictly inside (0, 1), got {self.base_score}"
            )

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


class Gradients(NamedTuple):
    """First (g) and second (h) derivative of the loss per row."""

    g: np.ndarray
    h: np.ndarray


@dataclass
class Leaf:
    weight: float
    g_sum: float
    h_sum: float


@dataclass
class Split:
    feature: int
    threshold: float
    gain: float
    left: "TreeNode"
    right: "TreeNode"
    g_sum: float
    h_sum: float


TreeNode = Union[Leaf, Split]


@dataclass
class Tree:
    """A single CART; rows with feature value < threshold route left."""

    root: TreeNode

    @property
    def leaf_count(self) -> int:
        def count(node: TreeNode) -> int:
            if isinstance(node, Leaf):
                return 1
            return count(node.left) + count(node.right)

        return count(self.root)

    @property
    def depth(self) -> int:
        def height(node: TreeNode) -> int:
            if isinstance(node, Leaf):
                return 0
            return 1 + max(height(node.left), height(node.right))

        return height(self.root)

    def predict_into(self, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
        """Add this tree's leaf weight to ``out`` for the rows in ``idx``."""
        node = self.root
        stack = [(node, idx)]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            if isinstance(node, Leaf):
                out[rows] += node.weight
                continue
            go_left = X[rows, node.feature] < node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))


@dataclass
class Model:
    """Ordered tree ensemble plus the settings that produced it."""

    trees: list[Tree]
    hyperparams: Hyperparams
    base_raw: float
    feature_count: int
    training_log: list[float] = field(default_factory=list)


class SplitCandidate(NamedTuple):
    feature: int
    threshold: float
    gain: float
    left_stats: tuple[float, float]
    right_stats: tuple[float, float]


def _sigmoid(raw: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(raw, dtype=np.float64)
    pos = raw >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
    e = np.exp(raw[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def compute_gradients(labels: np.ndarray, raw_scores: np.ndarray) -> Gradients:
    """Logistic-loss derivatives at the given raw scores: g = p - y, h = p(1-p)."""
    labels = np.asarray(labels, dtype=np.float64)
    raw_scores = np.asarray(raw_scores, dtype=np.float64)
    if labels.shape != raw_scores.shape:
        raise ValueError(
            f"length mismatch: {labels.shape[0]} labels vs {raw_scores.shape[0]} scores"
        )
    p = _sigmoid(raw_scores)
    return Gradients(g=p - labels, h=p * (1.0 - p))


def leaf_weight(G: float, H: float, lam: float) -> float:
    """Optimal weight -G/(H+lambda) of a leaf holding gradient totals (G, H)."""
    denom = H + lam
    if denom <= 0.0:
        raise ValueError(f"H + lambda must be positive, got {denom}")
    return -G / denom


def structure_score(
    leaf_stats: list[tuple[float, float]], lam: float, gamma: float
) -> float:
    """Regularized objective of a fixed tree structure with the given leaves."""
    if not leaf_stats:
        raise ValueError("structure_score requires at least one leaf")
    total = 0.0
    for G, H in leaf_stats:
        denom = H + lam
        if denom <= 0.0:
            raise ValueError(f"H + lambda must be positive, got {denom}")
        total += G * G / denom
    return -0.5 * total + gamma * len(leaf_stats)


def split_gain(
    G_L: float, H_L: float, G_R: float, H_R: float, lam: float, gamma: float
) -> float:
    """Objective reduction from splitting one leaf into (left, right)."""
    for H in (H_L, H_R, H_L + H_R):
        if H + lam <= 0.0:
            raise ValueError(f"H + lambda must be positive, got {H + lam}")
    G = G_L + G_R
    return 0.5 * (
        G_L * G_L / (H_L + lam)
        + G_R * G_R / (H_R + lam)
        - G * G / (H_L + H_R + lam)
    ) - gamma


def find_best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    feature_ids: np.ndarray,
    *,
    lam: float,
    gamma: float,
    min_child_weight: float,
) -> Optional[SplitCandidate]:
    """Exact greedy scan over the given rows and features.

    For each feature the rows are sorted and one candidate threshold is
    placed at the midpoint of every adjacent pair of distinct values.
    Candidates whose children would fall below ``min_child_weight`` hessian
    mass are discarded. Returns the maximum-gain candidate if its gain is
    strictly positive, else None. Ties break on (lower feature index, lower
    threshold), which the feature-major argmax below implements directly.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("find_best_split requires a nonempty row subset")
    feature_ids = np.sort(np.asarray(feature_ids, dtype=np.int64))
    if rows.size < 2 or feature_ids.size == 0:
        return None

    sub = X[np.ix_(rows, feature_ids)]
    gs = g[rows]
    hs = h[rows]
    G_total = float(gs.sum())
    H_total = float(hs.sum())
    if H_total + lam <= 0.0:
        return None

    order = np.argsort(sub, axis=0, kind="stable")
    vals = np.take_along_axis(sub, order, axis=0)
    G_left = np.cumsum(gs[order], axis=0)[:-1]
    H_left = np.cumsum(hs[order], axis=0)[:-1]
    G_right = G_total - G_left
    H_right = H_total - H_left

    lo = vals[:-1]
    hi = vals[1:]
    thresholds = 0.5 * (lo + hi)
    # Adjacent floats can make the midpoint collide with the lower value;
    # promote to the upper value, which induces the same partition under
    # strictly-less routing.
    np.copyto(thresholds, hi, where=thresholds <= lo)

    valid = (
        (lo < hi)
        & (H_left >= min_child_weight)
        & (H_right >= min_child_weight)
        & (H_left + lam > 0.0)
        & (H_right + lam > 0.0)
    )
    if not valid.any():
        return None

    parent_term = G_total * G_total / (H_total + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = 0.5 * (
            G_left * G_left / (H_left + lam)
            + G_right * G_right / (H_right + lam)
            - parent_term
        ) - gamma
    gains[~valid] = -np.inf

    # Feature-major flattening: the first occurrence of the max is the
    # lowest feature index, then the lowest threshold within it.
    flat = np.argmax(gains.T)
    fcol, pos = divmod(flat, gains.shape[0])
    best_gain = float(gains[pos, fcol])
    if not best_gain > 0.0:
        return None

    return SplitCandidate(
        feature=int(feature_ids[fcol]),
        threshold=float(thresholds[pos, fcol]),
        gain=best_gain,
        left_stats=(float(G_left[pos, fcol]), float(H_left[pos, fcol])),
        right_stats=(float(G_right[pos, fcol]), float(H_right[pos, fcol])),
    )


def build_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    params: Hyperparams,
    feature_ids: np.ndarray,
) -> Tree:
    """Grow a tree depth-first to ``max_depth``, then prune at the real gamma.

    Growth accepts any positive-gain split (gamma 0), matching the
    grow-then-prune training scheme; ``prune`` applies the configured gamma
    afterwards. Leaf weights are the optimal values scaled by eta.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("build_tree requires a nonempty row subset")
    feature_ids = np.sort(np.asarray(feature_ids, dtype=np.int64))
    lam = params.reg_lambda

    def grow(node_rows: np.ndarray, depth: int) -> TreeNode:
        G = float(g[node_rows].sum())
        H = float(h[node_rows].sum())
        cand = None
        if depth < params.max_depth:
            cand = find_best_split(
                X,
                g,
                h,
                node_rows,
                feature_ids,
                lam=lam,
                gamma=0.0,
                min_child_weight=params.min_child_weight,
            )
        if cand is None:
            return Leaf(weight=params.eta * leaf_weight(G, H, lam), g_sum=G, h_sum=H)
        go_left = X[node_rows, cand.feature] < cand.threshold
        return Split(
            feature=cand.feature,
            threshold=cand.threshold,
            gain=cand.gain,
            left=grow(node_rows[go_left], depth + 1),
            right=grow(node_rows[~go_left], depth + 1),
            g_sum=G,
            h_sum=H,
        )

    tree = Tree(root=grow(rows, 0))
    return prune(tree, params.gamma, lam, eta=params.eta)


def prune(tree: Tree, gamma: float, lam: float, eta: float = 1.0) -> Tree:
    """Collapse negative-gain splits bottom-up.

    Gains are recomputed from each node's stored gradient totals at the
    given gamma. A split whose children are both leaves and whose gain is
    <= 0 becomes a leaf carrying the parent's optimal (eta-scaled) weight;
    the recursion cascades so newly formed leaves expose their parents to
    the same test. Retained splits get their ``gain`` field rewritten to the
    recomputed value so the stored gains always reflect the pruning gamma.
    """

    def visit(node: TreeNode) -> TreeNode:
        if isinstance(node, Leaf):
            return node
        left = visit(node.left)
        right = visit(node.right)
        gain = split_gain(
            left.g_sum, left.h_sum, right.g_sum, right.h_sum, lam, gamma
        )
        if isinstance(left, Leaf) and isinstance(right, Leaf) and gain <= 0.0:
            return Leaf(
                weight=eta * leaf_weight(node.g_sum, node.h_sum, lam),
                g_sum=node.g_sum,
                h_sum=node.h_sum,
            )
        return Split(
            feature=node.feature,
            threshold=node.threshold,
            gain=gain,
            left=left,
            right=right,
            g_sum=node.g_sum,
            h_sum=node.h_sum,
        )

    return Tree(root=visit(tree.root))


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _classification_error(labels: np.ndarray, raw: np.ndarray) -> float:
    # raw >= 0 <=> probability >= 0.5, classified as spam.
    predicted = (raw >= 0.0).astype(np.int64)
    return float((predicted != labels).mean())


def train(
    train_ds: Dataset,
    params: Hyperparams,
    seed: int,
    valid_ds: Optional[Dataset] = None,
) -> Model:
    """Fit the boosted ensemble on ``train_ds``.

    Per round: sample columns and rows without replacement, compute
    gradients at the current raw scores, grow + prune one tree, and add its
    outputs to the scores. The monitored error (training error by default,
    validation error when ``valid_ds`` is given) drives early stopping: once
    it fails to strictly improve for ``early_stopping_rounds`` consecutive
    rounds, training stops and only the trees up to the best round are kept.
    Deterministic for a fixed seed.
    """
    if train_ds.n_rows == 0:
        raise ValueError("cannot train on an empty dataset")
    X = train_ds.features
    y = train_ds.labels
    n, p = X.shape
    rng = np.random.default_rng(seed)

    base_raw = _logit(params.base_score)
    raw = np.full(n, base_raw, dtype=np.float64)
    if valid_ds is not None:
        if valid_ds.feature_count != p:
            raise ValueError("validation set feature count differs from training set")
        valid_raw = np.full(valid_ds.n_rows, base_raw, dtype=np.float64)
        valid_idx = np.arange(valid_ds.n_rows, dtype=np.int64)

    n_cols = math.ceil(params.colsample * p)
    n_rows_sample = math.ceil(params.subsample * n)
    all_rows = np.arange(n, dtype=np.int64)
    all_cols = np.arange(p, dtype=np.int64)

    trees: list[Tree] = []
    training_log: list[float] = []
    best_metric = math.inf
    best_round = -1
    stalled = 0

    for t in range(params.num_rounds):
        if n_cols < p:
            cols = np.sort(rng.choice(all_cols, size=n_cols, replace=False))
        else:
            cols = all_cols
        if n_rows_sample < n:
            rows = np.sort(rng.choice(all_rows, size=n_rows_sample, replace=False))
        else:
            rows = all_rows

        g, h = compute_gradients(y, raw)
        tree = build_tree(X, g, h, rows, params, cols)
        trees.append(tree)
        tree.predict_into(X, all_rows, raw)

        train_error = _classification_error(y, raw)
        training_log.append(train_error)
        if valid_ds is not None:
            tree.predict_into(valid_ds.features, valid_idx, valid_raw)
            monitored = _classification_error(valid_ds.labels, valid_raw)
        else:
            monitored = train_error

        if monitored < best_metric:
            best_metric = monitored
            best_round = t
            stalled = 0
        else:
            stalled += 1
            if (
                params.early_stopping_rounds is not None
                and stalled >= params.early_stopping_rounds
            ):
                break

    if params.early_stopping_rounds is not None:
        trees = trees[: best_round + 1]

    return Model(
        trees=trees,
        hyperparams=params,
        base_raw=base_raw,
        feature_count=p,
        training_log=training_log,
    )


def _check_matrix(model: Model, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise ValueError(
            f"expected a matrix with {model.feature_count} columns, got shape {X.shape}"
        )
    return X


def predict_raw(model: Model, X: np.ndarray) -> np.ndarray:
    """Base raw score plus the sum of leaf weights reached in every tree."""
    X = _check_matrix(model, X)
    out = np.full(X.shape[0], model.base_raw, dtype=np.float64)
    idx = np.arange(X.shape[0], dtype=np.int64)
    for tree in model.trees:
        tree.predict_into(X, idx, out)
    return out


def predict_proba(model: Model, X: np.ndarray) -> np.ndarray:
    return _sigmoid(predict_raw(model, X))


def predict_label(model: Model, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Probability >= threshold classifies as spam (1); the boundary is inclusive."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return (predict_proba(model, X) >= threshold).astype(np.int64)


def _node_to_doc(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"weight": node.weight, "g_sum": node.g_sum, "h_sum": node.h_sum}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "gain": node.gain,
        "left": _node_to_doc(node.left),
        "right": _node_to_doc(node.right),
        "g_sum": node.g_sum,
        "h_sum": node.h_sum,
    }


def _node_from_doc(doc, feature_count: int) -> TreeNode:
    if not isinstance(doc, dict):
        raise ModelFormatError("tree node must be an object")
    if "weight" in doc:
        return Leaf(
            weight=float(doc["weight"]),
            g_sum=float(doc.get("g_sum", 0.0)),
            h_sum=float(doc.get("h_sum", 0.0)),
        )
    try:
        feature = int(doc["feature"])
        threshold = float(doc["threshold"])
        gain = float(doc["gain"])
        left = _node_from_doc(doc["left"], feature_count)
        right = _node_from_doc(doc["right"], feature_count)
    except KeyError as exc:
        raise ModelFormatError(f"split node missing field {exc}") from None
    if not 0 <= feature < feature_count:
        raise ModelFormatError(f"split feature {feature} out of range")
    return Split(
        feature=feature,
        threshold=threshold,
        gain=gain,
        left=left,
        right=right,
        g_sum=float(doc.get("g_sum", 0.0)),
        h_sum=float(doc.get("h_sum", 0.0)),
    )


def model_to_document(model: Model) -> dict:
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "hyperparams": {
            name: getattr(model.hyperparams, name)
            for name in Hyperparams.field_names()
        },
        "base_raw": model.base_raw,
        "feature_count": model.feature_count,
        "training_log": list(model.training_log),
        "trees": [_node_to_doc(tree.root) for tree in model.trees],
    }


def model_to_text(model: Model) -> str:
    # json round-trips float64 exactly (repr emits shortest exact form) and
    # sorted keys keep the output byte-stable across runs.
    return json.dumps(model_to_document(model), indent=1, sort_keys=True) + "\n"


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(model_to_text(model))


def model_from_document(doc) -> Model:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be an object")
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a {MODEL_FORMAT} document")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r}; expected {MODEL_FORMAT_VERSION}"
        )
    required = {"hyperparams", "base_raw", "feature_count", "trees"}
    missing = required - doc.keys()
    if missing:
        raise ModelFormatError(f"model document missing fields: {sorted(missing)}")
    raw_hp = doc["hyperparams"]
    if not isinstance(raw_hp, dict):
        raise ModelFormatError("hyperparams must be an object")
    unknown = set(raw_hp) - set(Hyperparams.field_names())
    if unknown:
        raise ModelFormatError(f"unknown hyperparameter fields: {sorted(unknown)}")
    try:
        hyperparams = Hyperparams(**raw_hp)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid hyperparams: {exc}") from None
    feature_count = int(doc["feature_count"])
    trees_doc = doc["trees"]
    if not isinstance(trees_doc, list):
        raise ModelFormatError("trees must be a list")
    trees = [Tree(root=_node_from_doc(node, feature_count)) for node in trees_doc]
    log = doc.get("training_log", [])
    if not isinstance(log, list):
        raise ModelFormatError("training_log must be a list")
    return Model(
        trees=trees,
        hyperparams=hyperparams,
        base_raw=float(doc["base_raw"]),
        feature_count=feature_count,
        training_log=[float(v) for v in log],
    )


def load_model(path: str | Path) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid model text ({exc})") from None
    return model_from_document(doc)
