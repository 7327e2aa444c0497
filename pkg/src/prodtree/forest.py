"""Bagged ensembles of decision trees with per-tree feature subsets.

Tree ``t`` of a forest seeded with ``seed`` draws from
``numpy.random.default_rng(SeedSequence([seed, t]))``: first the bootstrap
rows (``n`` draws with replacement, when enabled), then the feature subset
(without replacement, returned sorted). Trees are independent of each other,
so fitting them on several threads yields the same forest as fitting serially.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .angular import AngleMatrix
from .cart import DecisionTree, Task, TreeHyperparams, fit, fit_classical

__all__ = ["MaxFeatures", "ForestHyperparams", "Forest", "fit_forest", "predict_forest", "tree_rng"]


class MaxFeatures(str, enum.Enum):
    SQRT = "sqrt"
    ALL = "all"


@dataclass
class ForestHyperparams:
    tree: TreeHyperparams = field(default_factory=TreeHyperparams)
    n_estimators: int = 12
    max_features: MaxFeatures | int = MaxFeatures.SQRT
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.tree, dict):
            self.tree = TreeHyperparams.from_dict(self.tree)
        if isinstance(self.max_features, str):
            self.max_features = MaxFeatures(self.max_features)
        elif isinstance(self.max_features, bool) or int(self.max_features) != self.max_features:
            raise ValueError(f"max_features must be 'sqrt', 'all' or an int, got {self.max_features!r}")
        elif self.max_features < 1:
            raise ValueError("max_features count must be >= 1")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")

    def n_subset(self, n_features: int) -> int:
        if self.max_features is MaxFeatures.SQRT:
            return max(1, math.isqrt(n_features))
        if self.max_features is MaxFeatures.ALL:
            return n_features
        if self.max_features > n_features:
            raise ValueError(f"max_features={self.max_features} exceeds {n_features} features")
        return int(self.max_features)

    def to_dict(self) -> dict:
        mf = self.max_features.value if isinstance(self.max_features, MaxFeatures) else int(self.max_features)
        return {"tree": self.tree.to_dict(), "n_estimators": self.n_estimators,
                "max_features": mf, "bootstrap": self.bootstrap, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestHyperparams":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown forest hyperparameter(s): {sorted(extra)}")
        return cls(**d)


@dataclass
class Forest:
    trees: list[DecisionTree]
    subsets: list[np.ndarray]
    hyperparams: ForestHyperparams
    n_classes: int

    @property
    def task(self) -> Task:
        return self.hyperparams.tree.task

    @property
    def signature(self):
        return self.trees[0].signature

    def predict_proba(self, X) -> np.ndarray:
        if self.task is not Task.CLASSIFICATION:
            raise ValueError("predict_proba needs a classification forest")
        total = sum(t.predict_proba(X) for t in self.trees)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        if self.task is Task.CLASSIFICATION:
            total = sum(t.predict_proba(X) for t in self.trees)
            return np.argmax(total, axis=1)
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {
            "hyperparams": self.hyperparams.to_dict(),
            "n_classes": self.n_classes,
            "trees": [{"features": [int(f) for f in s], "tree": t.to_dict()}
                      for t, s in zip(self.trees, self.subsets)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(
            [DecisionTree.from_dict(r["tree"]) for r in d["trees"]],
            [np.asarray(r["features"], dtype=int) for r in d["trees"]],
            ForestHyperparams.from_dict(d["hyperparams"]),
            int(d["n_classes"]),
        )


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def fit_forest(data, y, hp: ForestHyperparams | None = None, n_threads: int = 1,
               feature_components=None) -> Forest:
    """Fit a forest on an :class:`AngleMatrix` (angular trees) or a plain
    matrix (classical threshold trees)."""
    hp = hp or ForestHyperparams()
    angular = isinstance(data, AngleMatrix)
    X = data.angles if angular else np.atleast_2d(np.asarray(data, dtype=float))
    n, F = X.shape
    if n == 0:
        raise ValueError("cannot fit a forest on empty data")
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"label/row count mismatch: {y.size} labels for {n} rows")
    n_classes = None
    if hp.tree.task is Task.CLASSIFICATION:
        n_classes = int(np.max(y)) + 1
    k = hp.n_subset(F)

    def one(t):
        rng = tree_rng(hp.seed, t)
        rows = rng.integers(0, n, size=n) if hp.bootstrap else np.arange(n)
        subset = np.sort(rng.choice(F, size=k, replace=False)) if k < F else np.arange(F)
        if angular:
            tree = fit(data.take(rows), y[rows], hp.tree, features=subset, n_classes=n_classes)
        else:
            tree = fit_classical(X[rows], y[rows], hp.tree, features=subset, n_classes=n_classes,
                                 feature_components=feature_components)
        return tree, subset

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, range(hp.n_estimators)))
    else:
        results = [one(t) for t in range(hp.n_estimators)]
    trees, subsets = zip(*results)
    return Forest(list(trees), list(subsets), hp, n_classes or 0)


def predict_forest(forest: Forest, X) -> np.ndarray:
    return forest.predict(X)
