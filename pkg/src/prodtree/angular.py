"""Projection angles, the half-plane split predicate, and angular midpoints.

Every feature is a pair of ambient columns ``(i, j)`` inside one component.
A point's feature value is ``atan2(x_i, x_j)`` in ``[0, 2*pi)`` and a split at
angle ``theta`` sends the point right when its angle lies in
``[theta, theta + pi)``, i.e. when ``x_i cos(theta) - x_j sin(theta) >= 0``.
That boundary is a homogeneous hyperplane, so each side is geodesically
convex in the component.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import Kind, PointBatch, Signature

TWO_PI = 2.0 * np.pi
_LIMIT_EPS = 1e-12


class FeatureMode(str, enum.Enum):
    BASIS_ONLY = "basis"
    ALL_PAIRS = "all_pairs"


class MidpointMode(str, enum.Enum):
    GEODESIC = "geodesic"
    ARITHMETIC = "arithmetic"


class PairClass(str, enum.Enum):
    TIMELIKE = "timelike"
    FREE = "free"


@dataclass(frozen=True)
class ProjectionIndex:
    component: int
    kind: Kind
    i: int
    j: int

    @property
    def pair_class(self) -> PairClass:
        if self.i == 0 and self.kind is not Kind.SPHERE:
            return PairClass.TIMELIKE
        return PairClass.FREE

    def to_dict(self) -> dict:
        return {"component": self.component, "kind": self.kind.value, "i": self.i, "j": self.j}

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectionIndex":
        return cls(int(d["component"]), Kind(d["kind"]), int(d["i"]), int(d["j"]))


def feature_map(sig: Signature, mode: FeatureMode | str = FeatureMode.ALL_PAIRS) -> list[ProjectionIndex]:
    """Feature order: components in signature order, then pairs lexicographically."""
    mode = FeatureMode(mode)
    out = []
    for ci, comp in enumerate(sig):
        if mode is FeatureMode.BASIS_ONLY:
            pairs = [(0, d) for d in range(1, comp.ambient_dim)]
        else:
            pairs = list(combinations(range(comp.ambient_dim), 2))
        out.extend(ProjectionIndex(ci, comp.kind, i, j) for i, j in pairs)
    return out


@dataclass
class AngleMatrix:
    angles: np.ndarray
    features: list[ProjectionIndex]
    mode: FeatureMode
    signature: Signature

    @property
    def n_features(self) -> int:
        return len(self.features)

    def __len__(self) -> int:
        return self.angles.shape[0]

    def take(self, rows) -> "AngleMatrix":
        return AngleMatrix(self.angles[rows], self.features, self.mode, self.signature)

    def timelike_mask(self) -> np.ndarray:
        return np.array([f.pair_class is PairClass.TIMELIKE for f in self.features], dtype=bool)


def normalize_angle(a):
    """Reduce to ``[0, 2*pi)``; ``-0.0`` becomes ``0.0``."""
    a = np.mod(np.asarray(a, dtype=float), TWO_PI) + 0.0
    return np.where(a >= TWO_PI, 0.0, a)


def angles_of(coords: np.ndarray, sig: Signature, features: list[ProjectionIndex]) -> np.ndarray:
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    starts = [sl.start for sl in sig.slices]
    cols_i = [starts[f.component] + f.i for f in features]
    cols_j = [starts[f.component] + f.j for f in features]
    xi, xj = coords[:, cols_i], coords[:, cols_j]
    # a point on the projection origin gets angle 0 (atan2 of signed zeros can give pi)
    return np.where((xi == 0) & (xj == 0), 0.0, normalize_angle(np.arctan2(xi, xj)))


def compute_angles(batch: PointBatch, mode: FeatureMode | str = FeatureMode.ALL_PAIRS) -> AngleMatrix:
    mode = FeatureMode(mode)
    feats = feature_map(batch.signature, mode)
    return AngleMatrix(angles_of(batch.coords, batch.signature, feats), feats, mode, batch.signature)


def split_indicator(angle, theta):
    """True where ``angle`` lies in ``[theta, theta + pi)`` modulo ``2*pi``."""
    diff = np.mod(np.asarray(angle, dtype=float) - theta, TWO_PI)
    return diff < np.pi


# --------------------------------------------------------------------------
# midpoints


def _euclidean_timelike_mid(a, b):
    # cot of the result is the arithmetic mean of cot(a) and cot(b)
    s = np.cos(a) / np.sin(a) + np.cos(b) / np.sin(b)
    return np.arctan2(2.0, s)


def _hyperbolic_timelike_mid(a, b):
    # cot(m) = tanh of the mean rapidity; written to stay accurate near a+b = pi
    lim_eq = np.abs(b - a) < _LIMIT_EPS
    lim_pi = np.abs(a + b - np.pi) < _LIMIT_EPS
    root = np.sqrt(np.maximum(np.cos(2 * a) * np.cos(2 * b), 0.0))
    m = np.arctan2(np.cos(a - b) + root, np.sin(a + b))
    m = np.where(lim_pi, np.pi / 2, m)
    return np.where(lim_eq, (a + b) / 2, m)


def midpoint(kind: Kind | str, pair_class: PairClass | str, theta_u, theta_v,
             mode: MidpointMode | str = MidpointMode.GEODESIC):
    """Split angle between two sample angles (vectorised).

    For free pairs and ``mode="arithmetic"`` this is the plain mean of the two
    angles, which is the bisector of the arc between them when both lie in
    ``[0, 2*pi)`` and ``|theta_u - theta_v| < 2*pi``. Timelike pairs use the
    geometry-specific equidistant point on the 2-D section.
    """
    kind, pair_class, mode = Kind(kind), PairClass(pair_class), MidpointMode(mode)
    a = np.asarray(theta_u, dtype=float)
    b = np.asarray(theta_v, dtype=float)
    if np.any(a == b):
        raise ValueError("midpoint needs two distinct angles")
    if mode is MidpointMode.ARITHMETIC or pair_class is PairClass.FREE:
        return (a + b) / 2
    if kind is Kind.EUCLIDEAN:
        return _euclidean_timelike_mid(a, b)
    if kind is Kind.HYPERBOLOID:
        return _hyperbolic_timelike_mid(a, b)
    return (a + b) / 2


def candidate_angles(sorted_unique, kind: Kind | str, pair_class: PairClass | str,
                     mode: MidpointMode | str = MidpointMode.GEODESIC) -> np.ndarray:
    """Split candidates for one feature from its sorted distinct angles.

    Free features also get the wraparound candidate bisecting the arc from the
    largest angle to the smallest one. Every candidate lies strictly inside
    the gap it bisects, so each one induces a distinct partition.
    """
    s = np.asarray(sorted_unique, dtype=float)
    if s.size < 2:
        return np.empty(0)
    lo, hi = s[:-1], s[1:]
    mids = midpoint(kind, pair_class, lo, hi, mode)
    mids = np.minimum(np.maximum(mids, np.nextafter(lo, np.inf)), hi)
    if PairClass(pair_class) is PairClass.FREE:
        wrap = normalize_angle((s[-1] + s[0] + TWO_PI) / 2)
        if s[-1] < wrap or wrap <= s[0]:
            mids = np.append(mids, wrap)
        mids = np.sort(mids)
    return mids
