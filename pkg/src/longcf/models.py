"""Black-box binary classifiers.

Counterfactual search only ever calls :meth:`Classifier.predict_proba`, so
the two built-in models are small and self-contained. Both operate on raw
schema-space rows; one-hot encoding and standardization stay internal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateLabels, MalformedDocument, MissingFile, NoLabels, SchemaMismatch
from .schema import Dataset, FeatureSchema

FORMAT_VERSION = 1


class Classifier:
    """Common prediction interface.

    Subclasses implement ``_proba(X)`` for a 2-D array of schema-space rows.
    """

    variant = "base"

    def __init__(self, schema: FeatureSchema, threshold: float = 0.5, hyperparameters=None):
        self.schema = schema
        self.threshold = float(threshold)
        self.hyperparameters = dict(hyperparameters or {})

    def predict_proba(self, X):
        """Probability of class 1 for one row (returns a float) or many rows."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != len(self.schema):
            raise SchemaMismatch(f"expected {len(self.schema)} features, got {X2.shape[1]}")
        p = np.clip(self._proba(X2), 0.0, 1.0)
        return float(p[0]) if single else p

    def predict(self, X):
        p = self.predict_proba(X)
        if np.ndim(p) == 0:
            return int(p >= self.threshold)
        return (p >= self.threshold).astype(np.int64)

    def _proba(self, X):
        raise NotImplementedError

    def _params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "schema_fingerprint": self.schema.fingerprint,
            "threshold": self.threshold,
            "hyperparameters": dict(self.hyperparameters),
            "params": self._params(),
        }


def predict_class(model: Classifier, x) -> int:
    """1 iff ``predict_proba(x) >= threshold`` (boundary counts as class 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise SchemaMismatch("predict_class takes a single feature vector")
    return model.predict(x)


def _check_labels(data: Dataset):
    if data.labels is None:
        raise NoLabels("training needs a labeled dataset")
    if len(np.unique(data.labels)) < 2:
        raise DegenerateLabels("labels contain a single class")


class _Encoder:
    """One-hot categoricals, standardize continuous columns."""

    def __init__(self, schema, mean, std):
        self.schema = schema
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)
        self.cont = np.flatnonzero(~schema.categorical_mask)
        self.cat = np.flatnonzero(schema.categorical_mask)
        self.width = len(self.cont) + int(schema.n_levels[self.cat].sum())

    @classmethod
    def fit(cls, schema, X):
        cont = ~schema.categorical_mask
        mean = np.zeros(len(schema))
        std = np.ones(len(schema))
        mean[cont] = X[:, cont].mean(axis=0)
        sd = X[:, cont].std(axis=0)
        std[cont] = np.where(sd > 0, sd, 1.0)
        return cls(schema, mean, std)

    def transform(self, X):
        out = np.zeros((X.shape[0], self.width))
        out[:, :len(self.cont)] = (X[:, self.cont] - self.mean[self.cont]) / self.std[self.cont]
        offset = len(self.cont)
        rows = np.arange(X.shape[0])
        for j in self.cat:
            out[rows, offset + X[:, j].astype(np.int64)] = 1.0
            offset += self.schema.n_levels[j]
        return out


class LogisticModel(Classifier):
    variant = "logistic"

    def __init__(self, schema, weights, bias, mean, std, threshold=0.5, hyperparameters=None):
        super().__init__(schema, threshold, hyperparameters)
        self.encoder = _Encoder(schema, mean, std)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)

    def _proba(self, X):
        z = self.encoder.transform(X) @ self.weights + self.bias
        return np.exp(-np.logaddexp(0.0, -z))  # overflow-free sigmoid

    def _params(self):
        return {"weights": self.weights.tolist(), "bias": self.bias,
                "mean": self.encoder.mean.tolist(), "std": self.encoder.std.tolist()}


def train_logistic(data: Dataset, epochs: int = 500, learning_rate: float = 0.5,
                   seed: int = 0, l2: float = 1e-4, threshold: float = 0.5) -> LogisticModel:
    """Full-batch gradient descent on the regularized log-loss."""
    _check_labels(data)
    enc = _Encoder.fit(data.schema, data.X)
    Z = enc.transform(data.X)
    y = data.labels.astype(float)
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.01, Z.shape[1])
    b = 0.0
    n = Z.shape[0]
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(Z @ w + b)))
        g = p - y
        w -= learning_rate * (Z.T @ g / n + l2 * w)
        b -= learning_rate * g.mean()
    hp = {"epochs": epochs, "learning_rate": learning_rate, "seed": seed, "l2": l2}
    return LogisticModel(data.schema, w, b, enc.mean, enc.std, threshold, hp)


# --- trees -------------------------------------------------------------------

LEAF = -1


@dataclass
class Tree:
    """Flat binary tree.

    Internal node ``i`` tests feature ``feature[i]``: continuous rows go left
    when ``x <= threshold[i]``, categorical rows go left when
    ``x == threshold[i]``. Leaves have ``feature == -1`` and carry the
    fraction of positive training rows in ``value``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    categorical: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict_proba(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f != LEAF
            if not active.any():
                return self.value[node]
            r, nd = rows[active], node[active]
            xv = X[r, self.feature[nd]]
            go_left = np.where(self.categorical[nd], xv == self.threshold[nd], xv <= self.threshold[nd])
            node[active] = np.where(go_left, self.left[nd], self.right[nd])

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "categorical": self.categorical.astype(int).tolist(), "left": self.left.tolist(),
                "right": self.right.tolist(), "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["categorical"], dtype=bool), np.array(d["left"], dtype=np.int64),
                   np.array(d["right"], dtype=np.int64), np.array(d["value"], dtype=float))


def _entropy(pos, total):
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, pos / total, 0.0)
        h = -(p * np.log2(np.where(p > 0, p, 1.0)) + (1 - p) * np.log2(np.where(p < 1, 1 - p, 1.0)))
    return h


def _best_split(X, y, features, categorical):
    """Highest information-gain split among ``features``; ``None`` if no gain."""
    n = len(y)
    npos = y.sum()
    parent = _entropy(np.array(npos, dtype=float), np.array(n, dtype=float))
    best = (0.0, None, None)
    for j in features:
        col = X[:, j]
        if categorical[j]:
            levels = np.unique(col)
            if len(levels) < 2:
                continue
            left_n = np.array([(col == l).sum() for l in levels], dtype=float)
            left_p = np.array([y[col == l].sum() for l in levels], dtype=float)
            thresholds = levels
        else:
            order = np.argsort(col, kind="stable")
            cs, ys = col[order], y[order]
            cut = np.flatnonzero(cs[1:] != cs[:-1])
            if len(cut) == 0:
                continue
            left_n = (cut + 1).astype(float)
            left_p = np.cumsum(ys)[cut].astype(float)
            thresholds = (cs[cut] + cs[cut + 1]) / 2.0
        right_n = n - left_n
        right_p = npos - left_p
        child = (left_n * _entropy(left_p, left_n) + right_n * _entropy(right_p, right_n)) / n
        gain = parent - child
        k = int(np.argmax(gain))
        if gain[k] > best[0] + 1e-12:
            best = (float(gain[k]), int(j), float(thresholds[k]))
    return None if best[1] is None else best[1:]


def grow_tree(X, y, schema: FeatureSchema, max_depth: int, rng, max_features=None,
              min_samples_split: int = 2) -> Tree:
    """Depth-limited entropy tree with per-split feature subsampling."""
    d = X.shape[1]
    m = d if max_features is None else max(1, min(d, int(max_features)))
    cat = schema.categorical_mask
    feature, threshold, categorical, left, right, value = [], [], [], [], [], []

    def new_node():
        for lst, v in ((feature, LEAF), (threshold, 0.0), (categorical, False),
                       (left, LEAF), (right, LEAF), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        value[node] = float(ys.mean())
        if depth >= max_depth or len(idx) < min_samples_split or ys.min() == ys.max():
            continue
        feats = np.arange(d) if m == d else np.sort(rng.choice(d, size=m, replace=False))
        split = _best_split(X[idx], ys, feats, cat)
        if split is None:
            continue
        j, t = split
        col = X[idx, j]
        mask = col == t if cat[j] else col <= t
        feature[node], threshold[node], categorical[node] = j, t, bool(cat[j])
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(categorical),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), np.array(value))


class ForestModel(Classifier):
    variant = "forest"

    def __init__(self, schema, trees, threshold=0.5, hyperparameters=None):
        super().__init__(schema, threshold, hyperparameters)
        self.trees = list(trees)

    def _proba(self, X):
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def _params(self):
        return {"trees": [t.to_dict() for t in self.trees]}


def train_forest(data: Dataset, n_trees: int = 50, max_depth: int = 6, seed: int = 0,
                 max_features="sqrt", bootstrap: bool = True, threshold: float = 0.5) -> ForestModel:
    """Bagged entropy trees; leaf probabilities are averaged across trees."""
    _check_labels(data)
    X, y = data.X, data.labels
    n, d = X.shape
    if max_features == "sqrt":
        mf = max(1, int(np.sqrt(d)))
    elif max_features is None:
        mf = d
    else:
        mf = int(max_features)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        trees.append(grow_tree(X[idx], y[idx], data.schema, max_depth, rng, mf))
    hp = {"n_trees": n_trees, "max_depth": max_depth, "seed": seed,
          "max_features": max_features, "bootstrap": bootstrap}
    return ForestModel(data.schema, trees, threshold, hp)


def accuracy(model: Classifier, data: Dataset) -> float:
    _check_labels(data)
    return float(np.mean(model.predict(data.X) == data.labels))


def save_model(model: Classifier, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def model_from_dict(doc: dict, schema: FeatureSchema) -> Classifier:
    if doc.get("format_version") != FORMAT_VERSION:
        raise MalformedDocument("format_version", f"unsupported model format {doc.get('format_version')!r}")
    if doc.get("schema_fingerprint") != schema.fingerprint:
        raise SchemaMismatch("model was trained against a different schema")
    try:
        params, hp, thr = doc["params"], doc.get("hyperparameters", {}), doc["threshold"]
        if doc["variant"] == LogisticModel.variant:
            return LogisticModel(schema, params["weights"], params["bias"], params["mean"],
                                 params["std"], thr, hp)
        if doc["variant"] == ForestModel.variant:
            return ForestModel(schema, [Tree.from_dict(t) for t in params["trees"]], thr, hp)
    except KeyError as exc:
        raise MalformedDocument(str(exc), "missing model field") from None
    raise MalformedDocument("variant", f"unknown model variant {doc.get('variant')!r}")


def load_model(path, schema: FeatureSchema) -> Classifier:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDocument("<root>", str(exc)) from None
    return model_from_dict(doc, schema)
