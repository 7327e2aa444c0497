"""Greedy CART induction over angular features, plus classical threshold CART.

Both tree kinds share :class:`DecisionTree`; they differ only in the split
rule stored on the tree:

* ``"angular"``: go right when ``(angle - theta) mod 2*pi < pi``
* ``"threshold"``: go right when ``x > threshold``

Equal-gain candidates resolve to the first one scanned: features in order,
angular candidates by ascending angle and thresholds by descending value. The
two orders coincide on lifted Euclidean data, where the angle is ``acot(x)``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .angular import (
    TWO_PI,
    AngleMatrix,
    FeatureMode,
    MidpointMode,
    PairClass,
    ProjectionIndex,
    candidate_angles,
    split_indicator,
)
from .geometry import Signature

__all__ = [
    "Task",
    "TreeHyperparams",
    "Leaf",
    "Split",
    "DecisionTree",
    "impurity",
    "information_gain",
    "fit",
    "fit_classical",
    "component_attribution",
]


class Task(str, enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass
class TreeHyperparams:
    max_depth: int | None = 5
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_impurity_decrease: float = 0.0
    task: Task = Task.CLASSIFICATION
    midpoint_mode: MidpointMode = MidpointMode.GEODESIC
    feature_mode: FeatureMode = FeatureMode.ALL_PAIRS
    seed: int = 0

    def __post_init__(self):
        self.task = Task(self.task)
        self.midpoint_mode = MidpointMode(self.midpoint_mode)
        self.feature_mode = FeatureMode(self.feature_mode)
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("task", "midpoint_mode", "feature_mode"):
            d[k] = d[k].value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeHyperparams":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown tree hyperparameter(s): {sorted(extra)}")
        return cls(**d)


@dataclass
class Leaf:
    n: int
    counts: np.ndarray | None = None
    value: float | None = None


@dataclass
class Split:
    feature: int
    cut: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


# --------------------------------------------------------------------------
# impurity


def _gini_counts(counts: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Gini impurity for rows of class counts; empty rows give 0."""
    n = np.asarray(n, dtype=float)
    safe = np.where(n > 0, n, 1.0)
    p = counts / safe[..., None]
    return 1.0 - np.sum(p * p, axis=-1)


def _variance_sums(s1, s2, n):
    n = np.asarray(n, dtype=float)
    safe = np.where(n > 0, n, 1.0)
    mean = s1 / safe
    return np.maximum(s2 / safe - mean * mean, 0.0)


def impurity(task: Task | str, labels) -> float:
    """Gini impurity (classification) or population variance (regression)."""
    y = np.asarray(labels)
    if y.size == 0:
        return 0.0
    if Task(task) is Task.CLASSIFICATION:
        _, counts = np.unique(y, return_counts=True)
        return float(_gini_counts(counts.astype(float), y.size))
    return float(np.var(y.astype(float)))


def information_gain(labels, left, right, task: Task | str = Task.CLASSIFICATION) -> float:
    n = len(labels)
    if n == 0:
        raise ValueError("information gain of an empty node")
    wl, wr = len(left) / n, len(right) / n
    return impurity(task, labels) - (wl * impurity(task, left) + wr * impurity(task, right))


# --------------------------------------------------------------------------
# split search


@dataclass
class _SplitSearch:
    """Label statistics in one node, ordered by a feature's values."""

    task: Task
    n_classes: int
    min_leaf: int

    def prefix(self, y_sorted: np.ndarray):
        if self.task is Task.CLASSIFICATION:
            onehot = np.zeros((y_sorted.size + 1, self.n_classes), dtype=np.int64)
            onehot[np.arange(1, y_sorted.size + 1), y_sorted] = 1
            return (np.cumsum(onehot, axis=0),)
        y = y_sorted.astype(float)
        return (np.concatenate([[0.0], np.cumsum(y)]), np.concatenate([[0.0], np.cumsum(y * y)]))

    def gains(self, parent: float, total, side, n_side, n):
        """Gain of every (side, complement) partition; invalid ones get -inf."""
        n_other = n - n_side
        if self.task is Task.CLASSIFICATION:
            c_side = side[0]
            c_other = total[0] - c_side
            i_side = _gini_counts(c_side, n_side)
            i_other = _gini_counts(c_other, n_other)
        else:
            i_side = _variance_sums(side[0], side[1], n_side)
            i_other = _variance_sums(total[0] - side[0], total[1] - side[1], n_other)
        w_side = n_side / n
        w_other = n_other / n
        g = parent - (w_side * i_side + w_other * i_other)
        ok = (n_side >= self.min_leaf) & (n_other >= self.min_leaf)
        return np.where(ok, g, -np.inf)


def _node_impurity(task, n_classes, y):
    if task is Task.CLASSIFICATION:
        counts = np.bincount(y, minlength=n_classes).astype(float)
        return float(_gini_counts(counts, y.size))
    return float(np.var(y))


def _make_leaf(task, n_classes, y) -> Leaf:
    if task is Task.CLASSIFICATION:
        return Leaf(n=int(y.size), counts=np.bincount(y, minlength=n_classes).astype(np.int64))
    return Leaf(n=int(y.size), value=float(np.mean(y)))


def _tie_tol(parent: float) -> float:
    # gains this close are equal up to summation-order rounding
    return 1e-12 * max(abs(parent), 1e-300)


def _first_best(g: np.ndarray, tol: float) -> tuple[int, float]:
    """First index whose gain is within ``tol`` of the maximum."""
    m = float(np.max(g))
    return int(np.argmax(g >= m - tol)), m


def _angular_best(A, y, rows, feats, pair_classes, kinds, hp, search):
    """Best (gain, feature, theta) over ``feats`` at the node holding ``rows``."""
    yr = y[rows]
    n = rows.size
    parent = _node_impurity(hp.task, search.n_classes, yr)
    best = (-np.inf, -1, 0.0)
    tol = _tie_tol(parent)
    for f in feats:
        a = A[rows, f]
        order = np.argsort(a, kind="stable")
        s = a[order]
        uniq = s[np.concatenate([[True], s[1:] != s[:-1]])]
        cands = candidate_angles(uniq, kinds[f], pair_classes[f], hp.midpoint_mode)
        if cands.size == 0:
            continue
        ys = yr[order]
        # circular runs [theta, theta + pi) over the doubled sorted sequence
        s2 = np.concatenate([s, s + TWO_PI])
        pre = search.prefix(np.concatenate([ys, ys]))
        lo = np.searchsorted(s2, cands, side="left")
        hi = np.searchsorted(s2, cands + np.pi, side="left")
        hi = np.minimum(hi, lo + n)
        side = tuple(p[hi] - p[lo] for p in pre)
        total = tuple(p[n] for p in pre)
        g = search.gains(parent, total, side, hi - lo, n)
        k, m = _first_best(g, tol)
        if m > best[0] + tol:
            best = (m, int(f), float(cands[k]))
    return best


def _threshold_best(X, y, rows, feats, hp, search):
    yr = y[rows]
    n = rows.size
    parent = _node_impurity(hp.task, search.n_classes, yr)
    best = (-np.inf, -1, 0.0)
    tol = _tie_tol(parent)
    for f in feats:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        s = x[order]
        uniq = np.unique(s)
        if uniq.size < 2:
            continue
        lo, hi = uniq[:-1], uniq[1:]
        t = (lo + hi) / 2
        t = np.minimum(np.maximum(t, lo), np.nextafter(hi, -np.inf))
        t = t[::-1]
        pre = search.prefix(yr[order])
        cut = np.searchsorted(s, t, side="right")
        right = tuple(p[n] - p[cut] for p in pre)
        total = tuple(p[n] for p in pre)
        g = search.gains(parent, total, right, n - cut, n)
        k, m = _first_best(g, tol)
        if m > best[0] + tol:
            best = (m, int(f), float(t[k]))
    return best


# --------------------------------------------------------------------------
# tree


class DecisionTree:
    """A fitted tree. ``rule`` is ``"angular"`` or ``"threshold"``."""

    def __init__(self, root: Node, rule: str, hyperparams: TreeHyperparams, n_classes: int,
                 n_features: int, feature_components: Sequence[int],
                 features: list[ProjectionIndex] | None = None,
                 signature: Signature | None = None):
        self.root = root
        self.rule = rule
        self.hyperparams = hyperparams
        self.n_classes = n_classes
        self.n_features = n_features
        self.feature_components = list(feature_components)
        self.features = features
        self.signature = signature

    @property
    def task(self) -> Task:
        return self.hyperparams.task

    def _goes_right(self, values, cut):
        if self.rule == "angular":
            return split_indicator(values, cut)
        return values > cut

    def apply(self, X) -> list[Leaf]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out: list = [None] * X.shape[0]
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                for i in idx:
                    out[i] = node
                continue
            right = self._goes_right(X[idx, node.feature], node.cut)
            stack.append((node.left, idx[~right]))
            stack.append((node.right, idx[right]))
        return out

    def leaf_ids(self, X) -> np.ndarray:
        ids = {id(leaf): k for k, leaf in enumerate(self.leaves())}
        return np.array([ids[id(leaf)] for leaf in self.apply(X)], dtype=int)

    def predict_proba(self, X) -> np.ndarray:
        if self.task is not Task.CLASSIFICATION:
            raise ValueError("predict_proba needs a classification tree")
        leaves = self.apply(X)
        return np.array([leaf.counts / leaf.n for leaf in leaves]).reshape(len(leaves), self.n_classes)

    def predict(self, X) -> np.ndarray:
        leaves = self.apply(X)
        if self.task is Task.CLASSIFICATION:
            # argmax returns the lowest class index on ties
            return np.array([int(np.argmax(leaf.counts)) for leaf in leaves], dtype=int)
        return np.array([leaf.value for leaf in leaves], dtype=float)

    def splits(self) -> list[Split]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Split):
                out.append(node)
                stack.extend([node.right, node.left])
        return out

    def leaves(self) -> list[Leaf]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.extend([node.right, node.left])
        return out

    @property
    def depth(self) -> int:
        def d(node):
            return 0 if isinstance(node, Leaf) else 1 + max(d(node.left), d(node.right))
        return d(self.root)

    def to_dict(self) -> dict:
        key = "theta" if self.rule == "angular" else "threshold"

        def enc(node):
            if isinstance(node, Leaf):
                if node.counts is not None:
                    return {"counts": [int(c) for c in node.counts], "n": node.n}
                return {"value": node.value, "n": node.n}
            return {"feature": node.feature, key: node.cut,
                    "left": enc(node.left), "right": enc(node.right)}

        return {
            "rule": self.rule,
            "hyperparams": self.hyperparams.to_dict(),
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "feature_components": self.feature_components,
            "feature_map": None if self.features is None else [f.to_dict() for f in self.features],
            "signature": None if self.signature is None else self.signature.to_dict(),
            "root": enc(self.root),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        key = "theta" if d["rule"] == "angular" else "threshold"

        def dec(node):
            if "feature" not in node:
                if "counts" in node:
                    return Leaf(n=int(node["n"]), counts=np.asarray(node["counts"], dtype=np.int64))
                return Leaf(n=int(node["n"]), value=float(node["value"]))
            return Split(int(node["feature"]), float(node[key]), dec(node["left"]), dec(node["right"]))

        feats = d.get("feature_map")
        sig = d.get("signature")
        return cls(
            dec(d["root"]), d["rule"], TreeHyperparams.from_dict(d["hyperparams"]),
            int(d["n_classes"]), int(d["n_features"]), d["feature_components"],
            None if feats is None else [ProjectionIndex.from_dict(f) for f in feats],
            None if sig is None else Signature.from_dict(sig),
        )


def _prepare_labels(y, n_rows, task, n_classes):
    y = np.asarray(y)
    if y.ndim != 1 or y.size != n_rows:
        raise ValueError(f"label/row count mismatch: {y.size} labels for {n_rows} rows")
    if n_rows == 0:
        raise ValueError("cannot fit a tree on empty input")
    if task is Task.CLASSIFICATION:
        if not np.all(np.equal(np.mod(y, 1), 0)) or np.any(y < 0):
            raise ValueError("classification labels must be non-negative integers")
        y = y.astype(np.int64)
        k = int(y.max()) + 1
        n_classes = k if n_classes is None else max(int(n_classes), k)
        return y, n_classes
    return y.astype(float), 0


def _grow(best_fn, data, y, rows, depth, hp, search, rule, n_classes):
    yr = y[rows]
    stop = (
        (hp.max_depth is not None and depth >= hp.max_depth)
        or rows.size < hp.min_samples_split
        or rows.size < 2 * hp.min_samples_leaf
        or _node_impurity(hp.task, n_classes, yr) == 0.0
    )
    if stop:
        return _make_leaf(hp.task, n_classes, yr)
    gain, f, cut = best_fn(rows)
    if f < 0 or not gain > hp.min_impurity_decrease:
        return _make_leaf(hp.task, n_classes, yr)
    vals = data[rows, f]
    right = split_indicator(vals, cut) if rule == "angular" else vals > cut
    if right.all() or not right.any():
        return _make_leaf(hp.task, n_classes, yr)
    return Split(
        f, cut,
        _grow(best_fn, data, y, rows[~right], depth + 1, hp, search, rule, n_classes),
        _grow(best_fn, data, y, rows[right], depth + 1, hp, search, rule, n_classes),
    )


def fit(angles: AngleMatrix, y, hp: TreeHyperparams | None = None,
        features: Sequence[int] | None = None, n_classes: int | None = None) -> DecisionTree:
    """Fit an angular tree; ``features`` restricts the scan to those columns."""
    hp = hp or TreeHyperparams()
    A = np.asarray(angles.angles, dtype=float)
    y, n_classes = _prepare_labels(y, A.shape[0], hp.task, n_classes)
    feats = list(range(A.shape[1])) if features is None else [int(f) for f in features]
    pair_classes = [f.pair_class for f in angles.features]
    kinds = [f.kind for f in angles.features]
    search = _SplitSearch(hp.task, n_classes, hp.min_samples_leaf)

    def best(rows):
        return _angular_best(A, y, rows, feats, pair_classes, kinds, hp, search)

    root = _grow(best, A, y, np.arange(A.shape[0]), 0, hp, search, "angular", n_classes)
    return DecisionTree(root, "angular", hp, n_classes, A.shape[1],
                        [f.component for f in angles.features], list(angles.features),
                        angles.signature)


def fit_classical(X, y, hp: TreeHyperparams | None = None, features: Sequence[int] | None = None,
                  n_classes: int | None = None,
                  feature_components: Sequence[int] | None = None) -> DecisionTree:
    """Classical CART with thresholds at arithmetic means of adjacent values."""
    hp = hp or TreeHyperparams()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y, n_classes = _prepare_labels(y, X.shape[0], hp.task, n_classes)
    feats = list(range(X.shape[1])) if features is None else [int(f) for f in features]
    search = _SplitSearch(hp.task, n_classes, hp.min_samples_leaf)

    def best(rows):
        return _threshold_best(X, y, rows, feats, hp, search)

    root = _grow(best, X, y, np.arange(X.shape[0]), 0, hp, search, "threshold", n_classes)
    comps = list(feature_components) if feature_components is not None else [0] * X.shape[1]
    return DecisionTree(root, "threshold", hp, n_classes, X.shape[1], comps)


def component_attribution(model) -> dict[int, float]:
    """Fraction of internal nodes splitting on each component.

    Accepts a tree or anything with a ``trees`` attribute (a forest).
    """
    trees = getattr(model, "trees", None) or [model]
    counts: dict[int, int] = {}
    for tree in trees:
        for s in tree.splits():
            c = tree.feature_components[s.feature]
            counts[c] = counts.get(c, 0) + 1
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no splits")
    n_comp = len(trees[0].signature) if trees[0].signature is not None else max(counts) + 1
    return {c: counts.get(c, 0) / total for c in range(max(n_comp, max(counts) + 1))}
