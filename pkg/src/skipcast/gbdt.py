"""Gradient-boosted regression trees for binary classification.

Second-order boosting on the logistic loss. Each round fits one regression
tree to the per-row gradients and hessians, using exact greedy split search
with the standard regularized gain

    1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma

and leaf values -G/(H+lambda). The learning rate is applied when a tree's
output is accumulated into the margin, not baked into the leaves.

Determinism: row and column subsampling draw from one np.random.default_rng
seeded at train() time, rows before columns each round, and both index sets
are sorted before use. Training twice with the same inputs and seed yields
bitwise-identical models.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateLabelsError,
    DimensionError,
    IntegrityError,
    UndefinedMetricError,
)

_P_EPS = 1e-15


@dataclass(frozen=True)
class TrainParams:
    num_boost_round: int = 200
    eta: float = 0.3
    max_depth: int = 6
    min_child_weight: float = 1.0
    lambda_: float = 1.0
    gamma: float = 0.0
    subsample: float = 1.0
    colsample: float = 1.0

    def validate(self) -> None:
        if self.num_boost_round < 1:
            raise ConfigError(f"num_boost_round must be >= 1, got {self.num_boost_round}")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_child_weight < 0.0:
            raise ConfigError(
                f"min_child_weight must be >= 0, got {self.min_child_weight}"
            )
        if self.lambda_ < 0.0:
            raise ConfigError(f"lambda_ must be >= 0, got {self.lambda_}")
        if self.gamma < 0.0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError(f"subsample must be in (0, 1], got {self.subsample}")
        if not 0.0 < self.colsample <= 1.0:
            raise ConfigError(f"colsample must be in (0, 1], got {self.colsample}")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


@dataclass(eq=False)
class TreeNode:
    """Internal node when left/right are set, leaf otherwise."""

    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        assert self.left is not None and self.right is not None
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TreeNode":
        if "value" in payload:
            return cls(value=float(payload["value"]))
        return cls(
            feature=int(payload["feature"]),
            threshold=float(payload["threshold"]),
            left=cls.from_dict(payload["left"]),
            right=cls.from_dict(payload["right"]),
        )


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, evaluated branch-wise."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_grad_hess(
    margins: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of the logistic loss wrt the margin."""
    margins = np.asarray(margins, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if margins.shape != labels.shape:
        raise DimensionError(
            f"margins shape {margins.shape} != labels shape {labels.shape}"
        )
    p = sigmoid(margins)
    return p - labels, p * (1.0 - p)


def logistic_loss(margins: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood; the quantity boosting drives down."""
    p = np.clip(sigmoid(margins), _P_EPS, 1.0 - _P_EPS)
    labels = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


def best_split(
    x: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    params: TrainParams,
    feature_indices: Optional[Sequence[int]] = None,
) -> Optional[Split]:
    """Exact greedy search over midpoint thresholds of every candidate feature.

    Returns the split with the highest gain, or None when no candidate has
    strictly positive gain while satisfying min_child_weight on both sides.
    Ties go to the lowest feature index, then the lowest threshold. Rows
    with value < threshold fall left.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"x must be 2-dimensional, got ndim={x.ndim}")
    n, n_features = x.shape
    if g.shape != (n,) or h.shape != (n,):
        raise DimensionError(
            f"g/h must have shape ({n},), got {g.shape} and {h.shape}"
        )
    if feature_indices is None:
        feature_indices = range(n_features)

    lam = params.lambda_
    total_g = float(g.sum())
    total_h = float(h.sum())
    parent_score = total_g * total_g / (total_h + lam)

    best: Optional[Split] = None
    for f in feature_indices:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        boundary = np.nonzero(sv[:-1] < sv[1:])[0]
        if boundary.size == 0:
            continue
        thresholds = (sv[boundary] + sv[boundary + 1]) / 2.0
        gl = cg[boundary]
        hl = ch[boundary]
        gr = total_g - gl
        hr = total_h - hl
        gains = 0.5 * (
            gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score
        ) - params.gamma
        # a midpoint that rounds down to the left value would misroute rows
        valid = (hl >= params.min_child_weight) & (hr >= params.min_child_weight)
        valid &= sv[boundary] < thresholds
        if not valid.any():
            continue
        gains = np.where(valid, gains, -np.inf)
        k = int(np.argmax(gains))
        if best is None or gains[k] > best.gain:
            best = Split(feature=int(f), threshold=float(thresholds[k]), gain=float(gains[k]))
    if best is None or best.gain <= 0.0:
        return None
    return best


def _leaf_value(g_sum: float, h_sum: float, lam: float) -> float:
    return -g_sum / (h_sum + lam)


def _build_tree(
    x: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    depth: int,
    params: TrainParams,
    feature_indices: np.ndarray,
) -> TreeNode:
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    if depth >= params.max_depth or rows.size < 2:
        return TreeNode(value=_leaf_value(g_sum, h_sum, params.lambda_))
    split = best_split(x[rows], g[rows], h[rows], params, feature_indices)
    if split is None:
        return TreeNode(value=_leaf_value(g_sum, h_sum, params.lambda_))
    mask = x[rows, split.feature] < split.threshold
    left = _build_tree(x, g, h, rows[mask], depth + 1, params, feature_indices)
    right = _build_tree(x, g, h, rows[~mask], depth + 1, params, feature_indices)
    return TreeNode(
        feature=split.feature, threshold=split.threshold, left=left, right=right
    )


def _tree_predict(node: TreeNode, x: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[rows] = node.value
        return
    assert node.left is not None and node.right is not None
    mask = x[rows, node.feature] < node.threshold
    _tree_predict(node.left, x, rows[mask], out)
    _tree_predict(node.right, x, rows[~mask], out)


def tree_values(node: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0], dtype=np.float64)
    _tree_predict(node, x, np.arange(x.shape[0]), out)
    return out


@dataclass(eq=False)
class GBDTModel:
    params: TrainParams
    base_score: float
    n_features: int
    seed: int
    trees: list[TreeNode] = field(default_factory=list)

    def _check_features(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise DimensionError(
                f"model expects {self.n_features} features per row, "
                f"got array of shape {x.shape}"
            )
        if np.isnan(x).any():
            raise IntegrityError("feature matrix contains NaN")
        return x

    def predict_margin(self, x: np.ndarray) -> np.ndarray:
        x = self._check_features(x)
        margins = np.full(x.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            margins += self.params.eta * tree_values(tree, x)
        return margins

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Skip probabilities, clipped into the open interval (0, 1)."""
        p = sigmoid(self.predict_margin(x))
        return np.clip(p, _P_EPS, 1.0 - _P_EPS)

    def to_dict(self) -> dict:
        return {
            "format": "skipcast-gbdt",
            "version": 1,
            "params": asdict(self.params),
            "base_score": self.base_score,
            "n_features": self.n_features,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GBDTModel":
        if payload.get("format") != "skipcast-gbdt":
            raise ConfigError("not a serialized gradient-boosted tree model")
        return cls(
            params=TrainParams(**payload["params"]),
            base_score=float(payload["base_score"]),
            n_features=int(payload["n_features"]),
            seed=int(payload["seed"]),
            trees=[TreeNode.from_dict(t) for t in payload["trees"]],
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=None) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Path | str) -> "GBDTModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train(
    x: np.ndarray,
    y: np.ndarray,
    params: TrainParams = TrainParams(),
    seed: int = 0,
) -> GBDTModel:
    """Fit a boosted-tree classifier. Requires both label classes present."""
    params.validate()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"x must be 2-dimensional, got ndim={x.ndim}")
    n, n_features = x.shape
    if y.shape != (n,):
        raise DimensionError(f"y must have shape ({n},), got {y.shape}")
    if n < 2:
        raise DegenerateLabelsError(f"need at least 2 training rows, got {n}")
    if np.isnan(x).any():
        raise IntegrityError("training matrix contains NaN")
    prevalence = float(y.mean())
    if prevalence <= 0.0 or prevalence >= 1.0:
        raise DegenerateLabelsError(
            "training labels contain a single class; cannot fit a classifier"
        )

    base_score = math.log(prevalence / (1.0 - prevalence))
    model = GBDTModel(
        params=params, base_score=base_score, n_features=n_features, seed=seed
    )
    rng = np.random.default_rng(seed)
    margins = np.full(n, base_score, dtype=np.float64)
    all_rows = np.arange(n)
    all_features = np.arange(n_features)

    for _ in range(params.num_boost_round):
        g, h = logistic_grad_hess(margins, y)
        if params.subsample < 1.0:
            m = max(1, int(params.subsample * n))
            rows = np.sort(rng.choice(n, size=m, replace=False))
        else:
            rows = all_rows
        if params.colsample < 1.0:
            k = max(1, int(params.colsample * n_features))
            features = np.sort(rng.choice(n_features, size=k, replace=False))
        else:
            features = all_features
        tree = _build_tree(x, g, h, rows, 0, params, features)
        model.trees.append(tree)
        margins += params.eta * tree_values(tree, x)
    return model


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve via the rank statistic; ties count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DimensionError(
            f"scores and labels must be equal-length vectors, got "
            f"{scores.shape} and {labels.shape}"
        )
    pos = labels.astype(bool)
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "auc needs both a positive and a negative example"
        )
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = float(ranks[pos].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
