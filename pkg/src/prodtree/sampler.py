"""Gaussian mixtures on product manifolds (wrapped normal construction).

Random draws happen in this fixed order from one ``numpy.random.default_rng``
(PCG64) seeded with ``spec.seed``:

1. ``n`` cluster weights ~ U(0, 1); ``m`` cluster assignments ~ Categorical.
2. For each component in signature order:
   a. ``n x D`` standard normals for the cluster means;
   b. for each cluster, a Wishart covariance by Bartlett decomposition
      (``D`` chi-square diagonal draws, then the strictly lower normals);
   c. ``m x D`` standard normals, coloured by the point's cluster covariance.
3. Classification: ``n - p`` uniform class draws for the surplus clusters.
   Regression: slopes ~ U(-1, 1), intercepts ~ U(-10, 10), ``m`` normals for
   the noise (scaled by ``noise``; drawn even when it is zero).

Each component is sampled at unit curvature and then rescaled to curvature
``K``: mean covariance ``sqrt(|K|) I``, Wishart scale ``sigma * sqrt(|K|)``, and final
coordinates divided by ``|K|`` so points satisfy ``||x|| = 1/K`` (sphere) and
``<x, x>_L = -1/K^2`` (hyperboloid). Euclidean components use factor 1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cart import Task
from .geometry import ComponentSpec, Kind, PointBatch, Signature, _unit_exp, _unit_transport

__all__ = [
    "MixtureSpec",
    "Dataset",
    "sample_mixture",
    "assign_classes",
    "regression_targets",
    "wishart_bartlett",
]

log = logging.getLogger(__name__)


@dataclass
class MixtureSpec:
    signature: Signature
    n_points: int = 1000
    n_clusters: int = 32
    n_classes: int = 8
    task: Task = Task.CLASSIFICATION
    sigma: float | None = None
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.signature, str):
            self.signature = Signature.parse(self.signature)
        elif isinstance(self.signature, dict):
            self.signature = Signature.from_dict(self.signature)
        self.task = Task(self.task)
        if not 1 <= self.n_clusters <= self.n_points:
            raise ValueError("need 1 <= n_clusters <= n_points")
        if self.task is Task.CLASSIFICATION and not 1 <= self.n_classes <= self.n_clusters:
            raise ValueError("need 1 <= n_classes <= n_clusters")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")

    def component_sigma(self, comp: ComponentSpec) -> float:
        return 0.25 / comp.dim if self.sigma is None else float(self.sigma)

    def to_dict(self) -> dict:
        return {"signature": self.signature.to_dict(), "n_points": self.n_points,
                "n_clusters": self.n_clusters, "n_classes": self.n_classes,
                "task": self.task.value, "sigma": self.sigma, "noise": self.noise,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown mixture field(s): {sorted(extra)}")
        if "signature" not in d:
            raise ValueError("mixture spec: missing field 'signature'")
        return cls(**d)


@dataclass
class Dataset:
    X: PointBatch
    y: np.ndarray
    task: Task
    clusters: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    class_of_cluster: np.ndarray | None = None
    means: list[np.ndarray] = field(default_factory=list)
    covariances: list[np.ndarray] = field(default_factory=list)
    tangent_draws: list[np.ndarray] = field(default_factory=list)
    slopes: np.ndarray | None = None
    intercepts: np.ndarray | None = None

    @property
    def signature(self) -> Signature:
        return self.X.signature

    def __len__(self) -> int:
        return len(self.X)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(PointBatch(self.signature, self.X.coords[rows]), self.y[rows], self.task,
                       self.clusters[rows] if self.clusters.size else self.clusters)

    def ground_truth(self) -> dict:
        """Mixture parameters as plain JSON-able data."""
        return {
            "signature": self.signature.to_dict(),
            "clusters": self.clusters.tolist(),
            "class_of_cluster": None if self.class_of_cluster is None else self.class_of_cluster.tolist(),
            "means": [m.tolist() for m in self.means],
            "covariances": [c.tolist() for c in self.covariances],
            "slopes": None if self.slopes is None else self.slopes.tolist(),
            "intercepts": None if self.intercepts is None else self.intercepts.tolist(),
        }


def wishart_bartlett(rng: np.random.Generator, scale: np.ndarray, df: int) -> np.ndarray:
    """One Wishart(scale, df) draw: ``L A A^T L^T`` with ``L = chol(scale)``."""
    scale = np.atleast_2d(scale)
    p = scale.shape[0]
    if df < p:
        raise ValueError(f"Bartlett sampling needs df >= dim ({df} < {p})")
    L = np.linalg.cholesky(scale)
    A = np.zeros((p, p))
    A[np.diag_indices(p)] = np.sqrt(rng.chisquare(df - np.arange(p)))
    low = np.tril_indices(p, -1)
    A[low] = rng.normal(size=len(low[0]))
    LA = L @ A
    return LA @ LA.T


def assign_classes(clusters, n_clusters: int, n_classes: int, rng: np.random.Generator):
    """Map clusters to classes: the first ``n_classes`` clusters are fixed to
    classes ``0..p-1``; the rest are drawn uniformly. Returns (labels, map)."""
    if not 1 <= n_classes <= n_clusters:
        raise ValueError("need 1 <= n_classes <= n_clusters")
    mapping = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, size=n_clusters - n_classes)])
    return mapping[np.asarray(clusters)], mapping


def regression_targets(x_euc: np.ndarray, clusters, n_clusters: int, rng: np.random.Generator,
                       noise: float = 0.0):
    """Per-cluster linear responses on the pre-transport draws, min-max scaled.

    Returns (y, slopes, intercepts). A zero range yields all-0.5 labels.
    """
    x_euc = np.atleast_2d(x_euc)
    clusters = np.asarray(clusters)
    slopes = rng.uniform(-1.0, 1.0, size=(n_clusters, x_euc.shape[1]))
    intercepts = rng.uniform(-10.0, 10.0, size=n_clusters)
    eps = rng.normal(size=x_euc.shape[0]) * noise
    y = np.einsum("ij,ij->i", x_euc, slopes[clusters]) + intercepts[clusters] + eps
    lo, hi = y.min(), y.max()
    if not hi > lo:
        log.warning("regression targets have zero range; emitting 0.5 for every label")
        return np.full_like(y, 0.5), slopes, intercepts
    return (y - lo) / (hi - lo), slopes, intercepts


def _sample_component(rng, comp: ComponentSpec, clusters, n_clusters: int, sigma: float):
    D = comp.dim
    k = 1.0 if comp.kind is Kind.EUCLIDEAN else abs(comp.curvature)
    spread = math.sqrt(k)
    # means ~ N(0, sqrt(K) I): covariance sqrt(K), so std K**0.25
    means_euc = rng.normal(size=(n_clusters, D)) * math.sqrt(spread)
    covs = np.array([wishart_bartlett(rng, sigma * spread * np.eye(D), D) for _ in range(n_clusters)])
    z = rng.normal(size=(len(clusters), D))
    chol = np.linalg.cholesky(covs)
    x_euc = np.einsum("nij,nj->ni", chol[clusters], z)

    o = np.zeros(D + 1)
    o[0] = 1.0
    pad = np.zeros((n_clusters, 1))
    means_unit = _unit_exp(comp.kind, o[None, :], np.hstack([pad, means_euc]))
    x_tan = np.hstack([np.zeros((len(clusters), 1)), x_euc])
    mu = means_unit[clusters]
    moved = _unit_transport(comp.kind, np.broadcast_to(o, mu.shape), mu, x_tan)
    pts = _unit_exp(comp.kind, mu, moved)
    scale = comp.scale
    return pts / scale, means_unit / scale, covs, x_euc, moved / scale


def sample_mixture(spec: MixtureSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n_clusters, spec.n_points
    p_raw = rng.uniform(0.0, 1.0, size=n)
    clusters = rng.choice(n, size=m, p=p_raw / p_raw.sum())

    blocks, means, covs, draws = [], [], [], []
    for comp in spec.signature:
        pts, mu, cov, x_euc, _ = _sample_component(rng, comp, clusters, n, spec.component_sigma(comp))
        blocks.append(pts)
        means.append(mu)
        covs.append(cov)
        draws.append(x_euc)
    X = PointBatch(spec.signature, np.hstack(blocks))

    ds = Dataset(X, np.empty(0), spec.task, clusters, means=means, covariances=covs,
                 tangent_draws=draws)
    if spec.task is Task.CLASSIFICATION:
        ds.y, ds.class_of_cluster = assign_classes(clusters, n, spec.n_classes, rng)
    else:
        ds.y, ds.slopes, ds.intercepts = regression_targets(np.hstack(draws), clusters, n, rng, spec.noise)
    return ds


def dump_ground_truth(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(ds.ground_truth(), fh)
