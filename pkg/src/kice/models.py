"""Black-box classifiers: Gaussian-kernel least squares, CART trees and plain predicates.

Every classifier exposes ``predict(X)`` over an ``(n, d)`` batch and returns
0/1 labels; ``dim`` is the expected input dimension.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

import numpy as np
from scipy import linalg

from .core import DimensionError, KnowledgeSet, as_vector, check_label


class BlackBoxClassifier(Protocol):
    dim: int

    def predict(self, X: np.ndarray) -> np.ndarray: ...


def _as_batch(model, X) -> tuple[np.ndarray, bool]:
    X = as_vector(X)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.dim:
        raise DimensionError(f"model expects {model.dim} features, got {X.shape[1]}")
    return X, single


def predict(model: BlackBoxClassifier, p):
    """Label of a single instance (int) or of a batch (int array)."""
    X, single = _as_batch(model, p)
    y = model.predict(X)
    return int(y[0]) if single else y


def _binary_labels(y) -> np.ndarray:
    y = np.asarray(y).astype(int).reshape(-1)
    extra = set(np.unique(y).tolist()) - {0, 1}
    if extra:
        raise ValueError(f"only binary 0/1 labels are supported, got classes {sorted(extra)}")
    return y


# --- kernel classifier -----------------------------------------------------


def gaussian_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass(frozen=True, eq=False)
class KernelClassifier:
    """``g(p) = sum_j w_j exp(-gamma ||p - s_j||^2) + bias``; label 1 iff g(p) > 0."""

    support_points: np.ndarray
    weights: np.ndarray
    bias: float
    gamma: float
    regularization: float

    def __post_init__(self) -> None:
        if self.gamma <= 0 or self.regularization <= 0:
            raise ValueError("gamma and regularization must be positive")
        S = np.array(self.support_points, dtype=float)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if S.ndim != 2 or S.shape[0] != w.size:
            raise ValueError("one weight per support point required")
        S.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support_points", S)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_sq_norms", np.einsum("ij,ij->i", S, S))

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X, _ = _as_batch(self, X)
        S = self.support_points
        sq = np.einsum("ij,ij->i", X, X)[:, None] + self._sq_norms[None, :] - 2.0 * X @ S.T
        np.maximum(sq, 0.0, out=sq)
        sq *= -self.gamma
        np.exp(sq, out=sq)
        return sq @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def to_dict(self) -> dict:
        return {
            "type": "kernel",
            "support_points": self.support_points.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "regularization": self.regularization,
        }


def train_kernel_classifier(X, y, gamma: float, regularization: float) -> KernelClassifier:
    """Regularized kernel least squares on +/-1 targets.

    Solves ``(K + reg I) w = t - mean(t)`` and uses ``mean(t)`` as the bias.
    """
    X = np.asarray(X, dtype=float)
    y = _binary_labels(y)
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        raise ValueError("need at least two examples covering both classes")
    t = 2.0 * y - 1.0
    bias = float(t.mean())
    K = gaussian_kernel(X, X, gamma)
    K[np.diag_indices_from(K)] += regularization
    w = linalg.solve(K, t - bias, assume_a="pos")
    return KernelClassifier(X, w, bias, gamma, regularization)


def kernel_residual(model: KernelClassifier, y) -> float:
    """``||(K + reg I) w - (t - bias)||`` for the training labels y."""
    t = 2.0 * _binary_labels(y) - 1.0
    S = model.support_points
    K = gaussian_kernel(S, S, model.gamma)
    K[np.diag_indices_from(K)] += model.regularization
    return float(np.linalg.norm(K @ model.weights - (t - model.bias)))


# --- decision tree ---------------------------------------------------------

LEAF = -1


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Binary tree stored as parallel arrays; node 0 is the root.

    Internal nodes send ``p[feature] <= threshold`` left. Leaves have
    ``feature == -1`` and carry ``label``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    max_depth: int
    dim: int

    def __post_init__(self) -> None:
        for name in ("feature", "left", "right", "label"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))
        object.__setattr__(self, "threshold", np.asarray(self.threshold, dtype=float))
        internal = self.feature != LEAF
        if np.any((self.feature[internal] < 0) | (self.feature[internal] >= self.dim)):
            raise ValueError("split feature outside the input dimension")

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def predict(self, X) -> np.ndarray:
        X, _ = _as_batch(self, X)
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.nonzero(active)[0]
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return self.label[node].copy()

    def to_dict(self) -> dict:
        return {
            "type": "tree",
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "label": self.label.tolist(),
            "max_depth": self.max_depth,
            "dim": self.dim,
        }


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count rows ``(..., 2)``."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n[..., None]
    out = 1.0 - np.sum(p * p, axis=-1)
    return np.where(n > 0, out, 0.0)


def best_split(X: np.ndarray, y: np.ndarray) -> Optional[tuple[int, float, float]]:
    """Best ``(feature, threshold, weighted child gini)`` or None if no split exists.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = y.size
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        # candidate cut after position i when xs[i] < xs[i+1]
        cut = np.nonzero(xs[1:] > xs[:-1])[0]
        if cut.size == 0:
            continue
        ones = np.cumsum(ys)[cut]
        n_left = cut + 1
        left = np.stack([n_left - ones, ones], axis=1)
        right = np.stack([(n - y.sum()) - left[:, 0], y.sum() - ones], axis=1)
        score = (n_left * gini(left) + (n - n_left) * gini(right)) / n
        k = int(np.argmin(score))
        if best is None or score[k] < best[2]:
            best = (j, 0.5 * (xs[cut[k]] + xs[cut[k] + 1]), float(score[k]))
    return best


def train_tree(X, y, max_depth: int) -> DecisionTree:
    """Greedy CART with Gini impurity.

    A node becomes a leaf at max_depth, when pure, with fewer than two
    samples, or when all its samples coincide.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    X = np.asarray(X, dtype=float)
    y = _binary_labels(y)
    nodes: list[list] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        me = len(nodes)
        ones = int(y[idx].sum())
        majority = int(ones * 2 > idx.size)
        nodes.append([LEAF, 0.0, LEAF, LEAF, majority])
        if depth >= max_depth or idx.size < 2 or ones in (0, idx.size):
            return me
        split = best_split(X[idx], y[idx])
        if split is None:
            return me
        j, thr, _ = split
        mask = X[idx, j] <= thr
        nodes[me][0], nodes[me][1] = j, thr
        nodes[me][2] = grow(idx[mask], depth + 1)
        nodes[me][3] = grow(idx[~mask], depth + 1)
        nodes[me][4] = LEAF
        return me

    grow(np.arange(y.size), 0)
    cols = list(zip(*nodes))
    return DecisionTree(*[np.array(c) for c in cols], max_depth=max_depth, dim=X.shape[1])


def extract_knowledge(tree: DecisionTree) -> KnowledgeSet:
    """Features used by at least one split of the tree."""
    used = tree.feature[tree.feature != LEAF]
    return KnowledgeSet(set(used.tolist()), tree.dim)


# --- closed-form predicates ------------------------------------------------


@dataclass(frozen=True)
class PredicateClassifier:
    """A classifier given by a vectorized predicate ``fn(X) -> bool array``."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    name: str = "predicate"

    def predict(self, X) -> np.ndarray:
        X, _ = _as_batch(self, X)
        return np.asarray(self.fn(X), dtype=bool).astype(int).reshape(-1)


def half_plane(weights, offset: float) -> PredicateClassifier:
    """Label 1 iff ``weights . p > offset``."""
    w = np.asarray(weights, dtype=float)
    return PredicateClassifier(lambda X: X @ w > offset, w.size, f"half_plane({w.tolist()}, {offset})")


def constant(label: int, dim: int) -> PredicateClassifier:
    label = check_label(label)
    return PredicateClassifier(lambda X: np.full(X.shape[0], bool(label)), dim, f"constant({label})")


# --- persistence -----------------------------------------------------------

Model = Union[KernelClassifier, DecisionTree]


def model_from_dict(data: dict) -> Model:
    kind = data.get("type")
    if kind == "kernel":
        return KernelClassifier(
            np.asarray(data["support_points"], dtype=float),
            np.asarray(data["weights"], dtype=float),
            float(data["bias"]),
            float(data["gamma"]),
            float(data["regularization"]),
        )
    if kind == "tree":
        return DecisionTree(
            data["feature"], data["threshold"], data["left"], data["right"], data["label"],
            max_depth=int(data["max_depth"]), dim=int(data["dim"]),
        )
    raise ValueError(f"unknown model type {kind!r}")


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text()))


def accuracy(model: BlackBoxClassifier, X, y) -> float:
    return float(np.mean(model.predict(np.asarray(X, dtype=float)) == np.asarray(y)))
