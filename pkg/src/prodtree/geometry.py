"""Constant-curvature manifolds and their Cartesian products.

Points live in ambient coordinates. A component of intrinsic dimension ``D``
always occupies ``D + 1`` ambient columns:

* sphere ``S^{D,K}``: ``||x|| = 1/K``
* hyperboloid ``H^{D,K}``: ``<x, x>_L = -1/K^2`` with ``x_0 > 0``
* Euclidean ``E^D``: stored lifted as ``(1, x)``

Curved kernels work at unit curvature; curvature ``K`` is handled by scaling
coordinates (and tangent vectors) by ``|K|`` on the way in and ``1/|K|`` on the
way out.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Kind",
    "ComponentSpec",
    "Signature",
    "PointBatch",
    "TangentBatch",
    "Violation",
    "ManifoldError",
    "DegenerateInputError",
    "dot",
    "minkowski",
    "distance",
    "product_distance",
    "pairwise_distances",
    "origin",
    "exp_map",
    "log_map",
    "parallel_transport",
    "geodesic_point",
    "validate",
    "CONSTRAINT_TOL",
    "tangent_coordinates",
    "lift_euclidean",
    "concat_batches",
    "component_of_column",
]

CONSTRAINT_TOL = 1e-8
_ANTIPODAL_TOL = 1e-12


class ManifoldError(ValueError):
    """Input violates a manifold or tangent-space constraint."""


class DegenerateInputError(ManifoldError):
    """Input for which the requested map is undefined (e.g. antipodal points)."""


class Kind(str, enum.Enum):
    SPHERE = "sphere"
    HYPERBOLOID = "hyperboloid"
    EUCLIDEAN = "euclidean"

    @property
    def letter(self) -> str:
        return {"sphere": "S", "hyperboloid": "H", "euclidean": "E"}[self.value]


@dataclass(frozen=True)
class ComponentSpec:
    kind: Kind
    dim: int
    curvature: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        k = float(self.curvature)
        object.__setattr__(self, "curvature", k)
        if self.kind is Kind.SPHERE and not k > 0:
            raise ValueError(f"sphere curvature must be > 0, got {k}")
        if self.kind is Kind.HYPERBOLOID and not k < 0:
            raise ValueError(f"hyperboloid curvature must be < 0, got {k}")
        if self.kind is Kind.EUCLIDEAN and k != 0:
            raise ValueError(f"euclidean curvature must be 0, got {k}")

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    @property
    def scale(self) -> float:
        """Factor mapping coordinates to the unit-curvature model (1 for E)."""
        return abs(self.curvature) if self.kind is not Kind.EUCLIDEAN else 1.0

    def __str__(self) -> str:
        if self.kind is Kind.EUCLIDEAN or abs(self.curvature) == 1.0:
            return f"{self.kind.letter}{self.dim}"
        return f"{self.kind.letter}{self.dim}({self.curvature:g})"

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim, "curvature": self.curvature}


_SIG_TOKEN = re.compile(r"^([SHE])(\d+)(?:\(([-+0-9.eE]+)\))?$")


@dataclass(frozen=True)
class Signature:
    """Ordered list of component manifolds."""

    components: tuple[ComponentSpec, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a signature needs at least one component")
        for c in comps:
            if not isinstance(c, ComponentSpec):
                raise TypeError(f"expected ComponentSpec, got {type(c).__name__}")
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i: int) -> ComponentSpec:
        return self.components[i]

    def __str__(self) -> str:
        return "x".join(str(c) for c in self.components)

    @property
    def ambient_dim(self) -> int:
        return sum(c.ambient_dim for c in self.components)

    @property
    def intrinsic_dim(self) -> int:
        return sum(c.dim for c in self.components)

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for c in self.components:
            out.append(slice(start, start + c.ambient_dim))
            start += c.ambient_dim
        return out

    def __add__(self, other: "Signature") -> "Signature":
        return Signature(self.components + other.components)

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Parse a compact form such as ``"S2xE2xH2"`` or ``"H4(-2)"``.

        Curvature defaults to +1 for ``S``, -1 for ``H`` and 0 for ``E``.
        """
        comps = []
        for tok in text.replace(" ", "").split("x"):
            m = _SIG_TOKEN.match(tok)
            if m is None:
                raise ValueError(f"cannot parse signature component {tok!r}")
            letter, dim, k = m.groups()
            kind = {"S": Kind.SPHERE, "H": Kind.HYPERBOLOID, "E": Kind.EUCLIDEAN}[letter]
            if k is None:
                k = {"S": 1.0, "H": -1.0, "E": 0.0}[letter]
            comps.append(ComponentSpec(kind, int(dim), float(k)))
        return cls(tuple(comps))

    @classmethod
    def from_dict(cls, d: dict) -> "Signature":
        if not isinstance(d, dict) or "components" not in d:
            raise ValueError("signature: missing field 'components'")
        comps = []
        for i, c in enumerate(d["components"]):
            for field in ("kind", "dim", "curvature"):
                if field not in c:
                    raise ValueError(f"signature: components[{i}] missing field '{field}'")
            try:
                comps.append(ComponentSpec(Kind(c["kind"]), c["dim"], c["curvature"]))
            except ValueError as e:
                raise ValueError(f"signature: components[{i}]: {e}") from None
        return cls(tuple(comps))

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Signature":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Violation:
    row: int
    component: int
    constraint: str
    residual: float


@dataclass
class PointBatch:
    signature: Signature
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if self.coords.shape[1] != self.signature.ambient_dim:
            raise ManifoldError(
                f"expected {self.signature.ambient_dim} columns for {self.signature}, "
                f"got {self.coords.shape[1]}"
            )

    def __len__(self) -> int:
        return self.coords.shape[0]

    def component(self, i: int) -> np.ndarray:
        return self.coords[:, self.signature.slices[i]]

    def violations(self, tol: float = CONSTRAINT_TOL) -> list[Violation]:
        return validate(self, tol)

    def check(self, tol: float = CONSTRAINT_TOL) -> "PointBatch":
        bad = self.violations(tol)
        if bad:
            v = bad[0]
            raise ManifoldError(
                f"{len(bad)} constraint violation(s); first: row {v.row}, "
                f"component {v.component}, {v.constraint} (residual {v.residual:.3g})"
            )
        return self


@dataclass
class TangentBatch:
    signature: Signature
    base: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float).reshape(-1)
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))

    def violations(self, tol: float = CONSTRAINT_TOL) -> list[Violation]:
        out = []
        for ci, (comp, sl) in enumerate(zip(self.signature, self.signature.slices)):
            res = _tangent_residual(comp, self.base[sl], self.vectors[:, sl])
            for r in np.flatnonzero(res > tol):
                out.append(Violation(int(r), ci, "tangent", float(res[r])))
        return out


# --------------------------------------------------------------------------
# inner products


def _check_lengths(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"length mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    return u, v


def dot(u, v):
    """Euclidean inner product over the last axis."""
    u, v = _check_lengths(u, v)
    return np.sum(u * v, axis=-1)


def minkowski(u, v):
    """Minkowski inner product ``-u_0 v_0 + sum_{i>=1} u_i v_i`` over the last axis."""
    u, v = _check_lengths(u, v)
    if u.shape[-1] < 1:
        raise ValueError("minkowski product needs vectors of length >= 1")
    return np.sum(u[..., 1:] * v[..., 1:], axis=-1) - u[..., 0] * v[..., 0]


def _inner(comp: ComponentSpec, u, v):
    if comp.kind is Kind.HYPERBOLOID:
        return minkowski(u, v)
    if comp.kind is Kind.SPHERE:
        return dot(u, v)
    return dot(u[..., 1:], v[..., 1:])


# --------------------------------------------------------------------------
# constraints


def _point_residual(comp: ComponentSpec, x: np.ndarray) -> tuple[np.ndarray, str]:
    x = np.atleast_2d(x)
    if comp.kind is Kind.SPHERE:
        r = 1.0 / comp.curvature
        return np.abs(np.linalg.norm(x, axis=1) - r) / r, "sphere norm"
    if comp.kind is Kind.HYPERBOLOID:
        r2 = 1.0 / comp.curvature**2
        res = np.abs(minkowski(x, x) + r2) / np.maximum(r2, x[:, 0] ** 2)
        # a point on the lower sheet is a hard violation
        return np.where(x[:, 0] > 0, res, np.inf), "hyperboloid minkowski norm"
    return np.abs(x[:, 0] - 1.0), "euclidean lift"


def _tangent_residual(comp: ComponentSpec, base: np.ndarray, v: np.ndarray) -> np.ndarray:
    v = np.atleast_2d(v)
    if comp.kind is Kind.EUCLIDEAN:
        return np.abs(v[:, 0])
    ip = _inner(comp, v, base[None, :])
    scale = np.maximum(1.0, np.linalg.norm(v, axis=1) * np.linalg.norm(base))
    return np.abs(ip) / scale


def _require_points(comp, *xs):
    for x in xs:
        res, what = _point_residual(comp, x)
        if np.any(res > CONSTRAINT_TOL):
            raise ManifoldError(f"{comp}: {what} violated (residual {np.max(res):.3g})")


def _require_tangent(comp, base, v):
    res = _tangent_residual(comp, np.asarray(base, dtype=float), v)
    if np.any(res > CONSTRAINT_TOL):
        raise ManifoldError(f"{comp}: vector not tangent at base (residual {np.max(res):.3g})")


def validate(batch: PointBatch, tol: float = CONSTRAINT_TOL) -> list[Violation]:
    """List every (row, component) whose manifold constraint fails at ``tol``."""
    out = []
    for ci, (comp, sl) in enumerate(zip(batch.signature, batch.signature.slices)):
        res, what = _point_residual(comp, batch.coords[:, sl])
        for r in np.flatnonzero(~(res <= tol)):
            out.append(Violation(int(r), ci, what, float(res[r])))
    out.sort(key=lambda v: (v.row, v.component))
    return out


# --------------------------------------------------------------------------
# distances


def _unit_distance(kind: Kind, u, v):
    # chord forms keep full precision for nearby points, where arccos and
    # arccosh of an argument close to 1 lose half the digits
    diff = u - v
    if kind is Kind.SPHERE:
        plus = u + v
        return 2.0 * np.arctan2(np.linalg.norm(diff, axis=-1), np.linalg.norm(plus, axis=-1))
    if kind is Kind.HYPERBOLOID:
        return _hyp_dist(_hyp_excess(u, v)[0])
    return np.linalg.norm(diff[..., 1:], axis=-1)


def _hyp_excess(u, v):
    """``(-<u, v>_L - 1, v - u)`` on the unit hyperboloid.

    Nearby points far from the origin make ``<u, v>_L`` a difference of huge
    terms; the chord ``<v - u, v - u>_L = 2 (a - 1)`` avoids that cancellation.
    Far-apart points use the inner product directly, which is then accurate.
    """
    diff = v - u
    a = -minkowski(u, v)
    chord = np.maximum(minkowski(diff, diff), 0.0) / 2.0
    return np.where(a > 2.0, a - 1.0, chord), diff


def _hyp_dist(am1):
    # arccosh(1 + x) = 2 asinh(sqrt(x / 2)), exact for small x
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(am1, 0.0) / 2.0))


def distance(comp: ComponentSpec, u, v, check: bool = True):
    """Geodesic distance between points of one component (broadcasts over rows)."""
    u, v = _check_lengths(u, v)
    if u.shape[-1] != comp.ambient_dim:
        raise ValueError(f"{comp}: expected {comp.ambient_dim} coordinates, got {u.shape[-1]}")
    if check:
        _require_points(comp, u.reshape(-1, u.shape[-1]), v.reshape(-1, v.shape[-1]))
    s = comp.scale
    return _unit_distance(comp.kind, u * s, v * s) / s


def product_distance(sig: Signature, u, v, check: bool = True):
    """l2 combination of per-component geodesic distances."""
    u, v = _check_lengths(u, v)
    total = 0.0
    for comp, sl in zip(sig, sig.slices):
        total = total + distance(comp, u[..., sl], v[..., sl], check=check) ** 2
    return np.sqrt(total)


def pairwise_distances(sig: Signature, X, Y=None) -> np.ndarray:
    """Matrix of product distances between rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    sq = np.zeros((X.shape[0], Y.shape[0]))
    for comp, sl in zip(sig, sig.slices):
        a, b = X[:, None, sl] * comp.scale, Y[None, :, sl] * comp.scale
        sq += (_unit_distance(comp.kind, a, b) / comp.scale) ** 2
    return np.sqrt(sq)


# --------------------------------------------------------------------------
# origin, exp, log, transport


def origin(sig: Signature | ComponentSpec) -> np.ndarray:
    if isinstance(sig, ComponentSpec):
        sig = Signature((sig,))
    parts = []
    for comp in sig:
        o = np.zeros(comp.ambient_dim)
        o[0] = 1.0 if comp.kind is Kind.EUCLIDEAN else 1.0 / abs(comp.curvature)
        parts.append(o)
    return np.concatenate(parts)


def _sinc_ratio(fn, n):
    """``fn(n) / n`` with the n -> 0 limit of 1 (fn is sin or sinh)."""
    safe = np.where(n > 1e-8, n, 1.0)
    return np.where(n > 1e-8, fn(safe) / safe, 1.0 - (1.0 if fn is np.sin else -1.0) * n * n / 6)


def _unit_exp(kind: Kind, base, v):
    if kind is Kind.EUCLIDEAN:
        return base + v
    if kind is Kind.SPHERE:
        n = np.linalg.norm(v, axis=-1)[..., None]
        out = np.cos(n) * base + _sinc_ratio(np.sin, n) * v
        return out / np.linalg.norm(out, axis=-1, keepdims=True)
    n = np.sqrt(np.maximum(minkowski(v, v), 0.0))[..., None]
    out = np.cosh(n) * base + _sinc_ratio(np.sinh, n) * v
    # re-seat on the upper sheet
    out[..., 0] = np.sqrt(1.0 + np.sum(out[..., 1:] ** 2, axis=-1))
    return out


def _unit_log(kind: Kind, base, q):
    if kind is Kind.EUCLIDEAN:
        out = q - base
        out[..., 0] = 0.0
        return out
    if kind is Kind.SPHERE:
        c = np.clip(dot(base, q), -1.0, 1.0)
        if np.any(1.0 + c < _ANTIPODAL_TOL):
            raise DegenerateInputError("log map undefined for antipodal points")
        d = np.arccos(c)[..., None]
        u = q - c[..., None] * base
        return u / _sinc_ratio(np.sin, d)
    am1, diff = _hyp_excess(base, q)
    d = _hyp_dist(am1)[..., None]
    u = diff - am1[..., None] * base
    return u / _sinc_ratio(np.sinh, d)


def _unit_transport(kind: Kind, src, dst, v):
    if kind is Kind.EUCLIDEAN:
        return np.array(v, dtype=float, copy=True)
    if kind is Kind.HYPERBOLOID:
        am1, diff = _hyp_excess(src, dst)
        am1 = am1[..., None]
        coef = minkowski(diff - am1 * src, v)[..., None] / (am1 + 2.0)
        return v + coef * (src + dst)
    # sphere: rotate the component along the geodesic direction
    u = _unit_log(kind, src, dst)
    d = np.linalg.norm(u, axis=-1, keepdims=True)
    e = np.where(d > 0, u / np.where(d > 0, d, 1.0), 0.0)
    ev = np.sum(e * v, axis=-1, keepdims=True)
    return v + ev * ((np.cos(d) - 1.0) * e - np.sin(d) * src)


def exp_map(comp: ComponentSpec, base, v, check: bool = True):
    """Exponential map at ``base`` (rows of ``v`` share or broadcast with ``base``)."""
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    if check:
        _require_points(comp, base.reshape(-1, base.shape[-1]))
        _require_tangent_rows(comp, base, v)
    s = comp.scale
    return _unit_exp(comp.kind, base * s, v * s) / s


def log_map(comp: ComponentSpec, base, q, check: bool = True):
    """Inverse of :func:`exp_map`; raises DegenerateInputError for antipodes."""
    base = np.asarray(base, dtype=float)
    q = np.asarray(q, dtype=float)
    if check:
        _require_points(comp, base.reshape(-1, base.shape[-1]), q.reshape(-1, q.shape[-1]))
    s = comp.scale
    return _unit_log(comp.kind, base * s, q * s) / s


def parallel_transport(comp: ComponentSpec, src, dst, v, check: bool = True):
    """Transport tangent vector(s) ``v`` from ``src`` to ``dst`` along the geodesic."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    v = np.asarray(v, dtype=float)
    if check:
        _require_points(comp, src.reshape(-1, src.shape[-1]), dst.reshape(-1, dst.shape[-1]))
        _require_tangent_rows(comp, src, v)
    s = comp.scale
    return _unit_transport(comp.kind, src * s, dst * s, v * s) / s


def _require_tangent_rows(comp, base, v):
    shape = np.broadcast_shapes(base.shape, v.shape)
    b = np.broadcast_to(base, shape).reshape(-1, shape[-1])
    vv = np.broadcast_to(v, shape).reshape(-1, shape[-1])
    res = np.concatenate([_tangent_residual(comp, bi, vi[None, :]) for bi, vi in zip(b, vv)]) \
        if comp.kind is not Kind.EUCLIDEAN else np.abs(vv[:, 0])
    if np.any(res > CONSTRAINT_TOL):
        raise ManifoldError(f"{comp}: vector not tangent at base (residual {np.max(res):.3g})")


def geodesic_point(sig: Signature, p, q, t):
    """Point at fraction ``t`` along the product geodesic from ``p`` to ``q``.

    ``t`` may be a scalar or a 1-D array; ``p`` and ``q`` are single rows.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tt = np.atleast_1d(t)[:, None]
    parts = []
    for comp, sl in zip(sig, sig.slices):
        v = log_map(comp, p[sl], q[sl])
        parts.append(exp_map(comp, p[sl][None, :], tt * v[None, :], check=False))
    out = np.concatenate(parts, axis=1)
    return out[0] if scalar else out


def tangent_coordinates(sig: Signature, X) -> np.ndarray:
    """Log map of every row at the product origin, concatenated per component."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    o = origin(sig)
    parts = [log_map(comp, o[sl], X[:, sl], check=False) for comp, sl in zip(sig, sig.slices)]
    return np.concatenate(parts, axis=1)


def lift_euclidean(x) -> np.ndarray:
    """Prepend the constant lifted coordinate to Euclidean rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.hstack([np.ones((x.shape[0], 1)), x])


def concat_batches(batches: Iterable[PointBatch]) -> PointBatch:
    """Column-wise concatenation (product of the signatures)."""
    batches = list(batches)
    sig = Signature(tuple(c for b in batches for c in b.signature))
    return PointBatch(sig, np.hstack([b.coords for b in batches]))


def component_of_column(sig: Signature) -> Sequence[int]:
    return [ci for ci, c in enumerate(sig) for _ in range(c.ambient_dim)]
