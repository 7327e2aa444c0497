"""Feature maps for the baselines, k-NN over product distances, and metrics."""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import stats

from ..cart import Task
from ..geometry import Kind, Signature, pairwise_distances, tangent_coordinates

log = logging.getLogger(__name__)


def ambient_features(sig: Signature, X) -> tuple[np.ndarray, list[int]]:
    """Raw ambient coordinates; the constant Euclidean lift column is dropped."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols, comps = [], []
    for ci, (comp, sl) in enumerate(zip(sig, sig.slices)):
        start = sl.start + (1 if comp.kind is Kind.EUCLIDEAN else 0)
        cols.extend(range(start, sl.stop))
        comps.extend([ci] * (sl.stop - start))
    return X[:, cols], comps


def tangent_features(sig: Signature, X) -> tuple[np.ndarray, list[int]]:
    """Log-map coordinates at the product origin, without the always-zero
    first coordinate of each component."""
    T = tangent_coordinates(sig, X)
    cols, comps = [], []
    for ci, sl in enumerate(sig.slices):
        cols.extend(range(sl.start + 1, sl.stop))
        comps.extend([ci] * (sl.stop - sl.start - 1))
    return T[:, cols], comps


def knn_predict(train_X, train_y, test_X, k: int = 5, sig: Signature | None = None,
                task: Task | str = Task.CLASSIFICATION, distances=None) -> np.ndarray:
    """k-NN on product distances.

    Distance ties go to the lower training row; vote ties to the lower class.
    ``distances`` may supply a precomputed (n_test, n_train) matrix.
    """
    task = Task(task)
    train_y = np.asarray(train_y)
    if distances is None:
        if sig is None:
            raise ValueError("need a signature or a precomputed distance matrix")
        distances = pairwise_distances(sig, test_X, train_X)
    distances = np.atleast_2d(distances)
    n_train = distances.shape[1]
    if not 1 <= k <= n_train:
        raise ValueError(f"k must be in [1, {n_train}], got {k}")
    nn = np.argsort(distances, axis=1, kind="stable")[:, :k]
    if task is Task.REGRESSION:
        return train_y[nn].astype(float).mean(axis=1)
    labels = train_y.astype(np.int64)
    n_classes = int(labels.max()) + 1
    votes = np.zeros((nn.shape[0], n_classes), dtype=np.int64)
    np.add.at(votes, (np.repeat(np.arange(nn.shape[0]), k), labels[nn].ravel()), 1)
    return np.argmax(votes, axis=1)


def accuracy(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape or truth.size == 0:
        raise ValueError("predictions and truth must be non-empty and the same shape")
    return float(np.mean(pred == truth))


def rmse(pred, truth) -> float:
    pred, truth = np.asarray(pred, dtype=float), np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or truth.size == 0:
        raise ValueError("predictions and truth must be non-empty and the same shape")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def metrics(pred, truth, kind: str) -> float:
    if kind == "accuracy":
        return accuracy(pred, truth)
    if kind == "rmse":
        return rmse(pred, truth)
    raise ValueError(f"unknown metric {kind!r}")


def ci_halfwidth(scores) -> float:
    """Half-width of the two-sided 95% t interval of the mean."""
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    if n < 2:
        log.warning("a single seed gives no confidence interval; reporting 0")
        return 0.0
    sd = float(np.std(scores, ddof=1))
    return float(stats.t.ppf(0.975, n - 1) * sd / math.sqrt(n))
