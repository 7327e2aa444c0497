"""Independent reference implementations used by the tests."""

import numpy as np

from prodtree.cart import Task


# ---------------------------------------------------------------- midpoints
#
# The 2-D section through coordinates (i, j) is a curve; the point at angle
# phi is where the ray (x_i, x_j) = (sin phi, cos phi) * r meets it. Each oracle
# bisects phi until the geodesic distances to the two sample points agree.

def _section_point(kind, phi):
    s, c = np.sin(phi), np.cos(phi)
    if kind == "sphere":
        return s, c
    if kind == "euclidean":
        # lifted plane x_i = 1
        return np.ones_like(phi), c / s
    # hyperbola x_i^2 - x_j^2 = 1 with x_i > 0
    r = 1.0 / np.sqrt(s * s - c * c)
    return s * r, c * r


def _section_distance(kind, a, b):
    (ai, aj), (bi, bj) = a, b
    if kind == "sphere":
        # chord form of the great-circle distance
        chord = np.hypot(ai - bi, aj - bj)
        return 2 * np.arctan2(chord, np.hypot(ai + bi, aj + bj))
    if kind == "euclidean":
        return np.abs(aj - bj)
    # hyperbolic distance along x_i^2 - x_j^2 = 1, chord form
    chord2 = np.maximum((aj - bj) ** 2 - (ai - bi) ** 2, 0.0)
    return 2 * np.arcsinh(np.sqrt(chord2) / 2)


def bisection_midpoint(kind: str, theta_u, theta_v, iters: int = 200):
    """Angle between theta_u < theta_v whose section point is equidistant from both."""
    lo = np.asarray(theta_u, dtype=float).copy()
    hi = np.asarray(theta_v, dtype=float).copy()
    pu, pv = _section_point(kind, lo), _section_point(kind, hi)
    for _ in range(iters):
        mid = (lo + hi) / 2
        pm = _section_point(kind, mid)
        f = _section_distance(kind, pm, pu) - _section_distance(kind, pm, pv)
        # f increases with phi as the point moves from u towards v
        lo = np.where(f < 0, mid, lo)
        hi = np.where(f < 0, hi, mid)
    return (lo + hi) / 2


# ---------------------------------------------------------------- metrics

def brute_gain(task, y, mask):
    """Information gain of splitting ``y`` by boolean ``mask``, from scratch."""
    def imp(v):
        if len(v) == 0:
            return 0.0
        if task is Task.REGRESSION:
            m = sum(v) / len(v)
            return sum((x - m) ** 2 for x in v) / len(v)
        counts = {}
        for x in v:
            counts[x] = counts.get(x, 0) + 1
        return 1.0 - sum((c / len(v)) ** 2 for c in counts.values())
    y = list(y)
    left = [v for v, m in zip(y, mask) if not m]
    right = [v for v, m in zip(y, mask) if m]
    n = len(y)
    return imp(y) - len(left) / n * imp(left) - len(right) / n * imp(right)


def brute_knn(D, train_y, k, regression=False):
    """Double loop k-NN: distance ties to lower index, vote ties to lower class."""
    out = []
    for row in D:
        order = sorted(range(len(row)), key=lambda j: (row[j], j))[:k]
        labs = [train_y[j] for j in order]
        if regression:
            out.append(sum(labs) / k)
            continue
        best, best_n = None, -1
        for c in sorted(set(labs)):
            n = labs.count(c)
            if n > best_n:
                best, best_n = c, n
        out.append(best)
    return np.array(out)


# ---------------------------------------------------------------- shared data

def euclidean_case(seed: int, regression: bool = False):
    """Random lifted-Euclidean train/test data and a tree depth, for the
    angular-vs-classical equivalence check."""
    from prodtree.geometry import PointBatch, Signature, lift_euclidean

    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 201))
    D = int(rng.integers(1, 6))
    depth = int(rng.integers(1, 6))
    X = rng.normal(size=(n + 50, D)) * rng.uniform(0.2, 5.0, D)
    if seed % 4 == 0:
        # coarse grid: plenty of tied coordinate values
        X = np.round(X * 2) / 2
    if regression:
        y = np.sin(X).sum(axis=1) + 0.1 * rng.normal(size=n + 50)
    else:
        w = rng.normal(size=D)
        y = (np.digitize(X @ w, np.quantile(X @ w, [0.3, 0.6])) + (rng.random(n + 50) < 0.1)) % 3
    sig = Signature.parse(f"E{D}")
    batch = PointBatch(sig, lift_euclidean(X))
    return batch, y, n, depth
