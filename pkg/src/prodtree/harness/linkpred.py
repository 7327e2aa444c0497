"""Pairwise link-prediction datasets from node embeddings."""

from __future__ import annotations

import numpy as np

from ..cart import Task
from ..geometry import ComponentSpec, Kind, PointBatch, Signature, pairwise_distances
from ..sampler import Dataset


def build_link_prediction_dataset(X: PointBatch, edges, ordered: bool = True,
                                  self_pairs: bool = True) -> Dataset:
    """One row ``(x_i, x_j, d(x_i, x_j))`` per node pair, labelled by adjacency.

    The result lives on ``P x P x E^1`` (the distance is stored lifted).
    Edges are read as undirected. ``ordered=False`` keeps only ``i < j``
    (plus ``i == i`` when ``self_pairs``). The ``clusters`` field of the
    returned dataset holds the ``(i, j)`` node indices of each row.
    """
    n = len(X)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ValueError(f"edge endpoints must lie in [0, {n})")
    adj = np.zeros((n, n), dtype=bool)
    adj[edges[:, 0], edges[:, 1]] = True
    adj[edges[:, 1], edges[:, 0]] = True

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    keep = np.ones(ii.size, dtype=bool)
    if not ordered:
        keep &= ii <= jj
    if not self_pairs:
        keep &= ii != jj
    ii, jj = ii[keep], jj[keep]

    D = pairwise_distances(X.signature, X.coords)
    np.fill_diagonal(D, 0.0)
    coords = np.hstack([X.coords[ii], X.coords[jj], np.ones((ii.size, 1)), D[ii, jj][:, None]])
    sig = X.signature + X.signature + Signature((ComponentSpec(Kind.EUCLIDEAN, 1, 0.0),))
    y = adj[ii, jj].astype(np.int64)
    return Dataset(PointBatch(sig, coords), y, Task.CLASSIFICATION, clusters=np.stack([ii, jj], axis=1))
