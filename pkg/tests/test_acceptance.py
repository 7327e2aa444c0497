"""Acceptance criteria. Each test prints one PASS/FAIL line and asserts it."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from prodtree.angular import Kind, PairClass, compute_angles, midpoint, normalize_angle
from prodtree.cart import Leaf, TreeHyperparams, component_attribution, fit, fit_classical
from prodtree.forest import ForestHyperparams
from prodtree.geometry import (
    PointBatch,
    Signature,
    concat_batches,
    distance,
    exp_map,
    geodesic_point,
    log_map,
    minkowski,
    dot,
    parallel_transport,
    validate,
)
from prodtree.harness import ExperimentConfig, run_experiment
from prodtree.harness.cli import main
from prodtree.sampler import MixtureSpec, sample_mixture

from .conftest import ACCEPTANCE_LINES, COMPONENTS, random_points, random_tangent
from .oracles import bisection_midpoint, euclidean_case

ROOT = Path(__file__).resolve().parents[1]
N_SEEDS = 10
THREADS = 4
EPS = 1e-6


def verdict(num: int, name: str, ok: bool, detail: str, capsys=None) -> None:
    line = f"ACCEPTANCE #{num:<2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    assert ok, line


def mean_accuracy(sig: str, model: str, **tree) -> tuple[float, float, float]:
    """(mean, CI half-width, seconds) over the desk-scale mixture benchmark."""
    cfg = ExperimentConfig(model=model, n_seeds=N_SEEDS,
                           sampler=MixtureSpec(sig, n_points=1000, n_clusters=32, n_classes=8),
                           tree=TreeHyperparams(**tree), forest=ForestHyperparams())
    t0 = time.perf_counter()
    rep = run_experiment(cfg, THREADS)
    return 100 * rep.mean, 100 * rep.ci_halfwidth, time.perf_counter() - t0


_CACHE: dict = {}


def cached(key, fn):
    if key not in _CACHE:
        _CACHE[key] = fn()
    return _CACHE[key]


# ---------------------------------------------------------------- 1

def test_1_euclidean_equivalence(capsys):
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(100):
        regression = seed % 3 == 2
        batch, y, n, depth = euclidean_case(seed, regression)
        hp = TreeHyperparams(max_depth=depth, task="regression" if regression else "classification")
        am = compute_angles(batch, "basis")
        ang = fit(am.take(np.arange(n)), y[:n], hp)
        cls = fit_classical(batch.coords[:n, 1:], y[:n], hp)
        if not np.array_equal(ang.predict(am.angles[n:]), cls.predict(batch.coords[n:, 1:])):
            mismatches += 1
    secs = time.perf_counter() - t0
    verdict(1, "Euclidean equivalence", mismatches == 0 and secs < 30,
            f"{mismatches}/100 datasets differ, {secs:.1f}s (limit 30s)", capsys)


# ---------------------------------------------------------------- 2

def test_2_midpoint_oracle(capsys):
    rng = np.random.default_rng(2)
    n = 10_000
    t0 = time.perf_counter()
    worst = {}
    for kind, pc, lo, hi in (("sphere", PairClass.FREE, 0.0, 2 * math.pi),
                             ("hyperboloid", PairClass.TIMELIKE, math.pi / 4 + 1e-3, 3 * math.pi / 4 - 1e-3),
                             ("euclidean", PairClass.TIMELIKE, 1e-3, math.pi - 1e-3)):
        a, b = rng.uniform(lo, hi, (2, n))
        if kind == "sphere":
            b = a + rng.uniform(1e-6, math.pi - 1e-6, n)
        u, v = np.minimum(a, b), np.maximum(a, b)
        # resample the rare near-equal pairs
        close = v - u < 1e-9
        v[close] = u[close] + 1e-3
        got = midpoint(Kind(kind), pc, u, v)
        worst[kind] = float(np.max(np.abs(got - bisection_midpoint(kind, u, v))))
    secs = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and secs < 10
    detail = ", ".join(f"{k} max|dtheta|={w:.1e}" for k, w in worst.items())
    verdict(2, "midpoint oracle", ok, f"{detail}; {secs:.1f}s (limit 10s)", capsys)


# ---------------------------------------------------------------- 3, 4 and forest no-harm

def test_3_hyperbolic_advantage(capsys):
    prf, pci, ts = cached(("H4", "ProductRF"), lambda: mean_accuracy("H4", "ProductRF"))
    arf, aci, ta = cached(("H4", "AmbientRF"), lambda: mean_accuracy("H4", "AmbientRF"))
    gap = prf - arf
    ok = gap >= 5 and ts < 300 and ta < 300
    verdict(3, "H4 ProductRF beats AmbientRF", ok,
            f"ProductRF {prf:.1f}±{pci:.1f}, AmbientRF {arf:.1f}±{aci:.1f}, gap {gap:+.1f} "
            f"(need >= +5); {ts:.0f}s/{ta:.0f}s", capsys)


def test_4_euclidean_parity(capsys):
    prf, pci, ts = cached(("E4", "ProductRF"), lambda: mean_accuracy("E4", "ProductRF"))
    arf, aci, ta = cached(("E4", "AmbientRF"), lambda: mean_accuracy("E4", "AmbientRF"))
    gap = prf - arf
    ok = abs(gap) <= 3 and ts < 300 and ta < 300
    verdict(4, "E4 ProductRF/AmbientRF parity", ok,
            f"ProductRF {prf:.1f}±{pci:.1f}, AmbientRF {arf:.1f}±{aci:.1f}, |gap| {abs(gap):.1f} "
            f"(need <= 3); {ts:.0f}s/{ta:.0f}s", capsys)


def test_forest_no_harm(capsys):
    prf, _, _ = cached(("H4", "ProductRF"), lambda: mean_accuracy("H4", "ProductRF"))
    pdt, _, _ = cached(("H4", "ProductDT"), lambda: mean_accuracy("H4", "ProductDT"))
    line = f"ProductRF {prf:.1f} vs ProductDT {pdt:.1f} (need RF >= DT - 2)"
    with capsys.disabled():
        print(f"\nforest no-harm: {'PASS' if prf >= pdt - 2 else 'FAIL'}  {line}")
    assert prf >= pdt - 2, line


# ---------------------------------------------------------------- 5, 6

def test_5_depth_ablation(capsys):
    deep, _, _ = mean_accuracy("S2xE2xH2", "ProductDT", max_depth=8)
    shallow, _, _ = mean_accuracy("S2xE2xH2", "ProductDT", max_depth=2)
    verdict(5, "depth ablation", deep - shallow >= 5,
            f"depth 8 {deep:.1f}, depth 2 {shallow:.1f}, gain {deep - shallow:+.1f} (need >= +5)", capsys)


def test_6_midpoint_ablation(capsys):
    geo, _, _ = cached(("S2xE2xH2", "geodesic"), lambda: mean_accuracy("S2xE2xH2", "ProductDT"))
    ari, _, _ = mean_accuracy("S2xE2xH2", "ProductDT", midpoint_mode="arithmetic")
    verdict(6, "midpoint ablation", abs(geo - ari) <= 2,
            f"geodesic {geo:.1f}, arithmetic {ari:.1f}, |diff| {abs(geo - ari):.1f} (need <= 2)", capsys)


# ---------------------------------------------------------------- 7

def _margins(tree, A):
    """Per row: smallest angular distance to any boundary on its root-to-leaf path."""
    out = np.full(len(A), np.inf)
    stack = [(tree.root, np.arange(len(A)))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf) or len(idx) == 0:
            continue
        rel = normalize_angle(A[idx, node.feature] - node.cut)
        # boundaries sit at rel = 0 and rel = pi
        d = np.minimum.reduce([rel, np.abs(rel - math.pi), 2 * math.pi - rel])
        out[idx] = np.minimum(out[idx], d)
        right = tree._goes_right(A[idx, node.feature], node.cut)
        stack += [(node.left, idx[~right]), (node.right, idx[right])]
    return out


def test_7_convexity(capsys):
    rng = np.random.default_rng(7)
    report = []
    total_violations = 0
    for sig in ("S4", "H4", "S2xE2xH2"):
        ds = sample_mixture(MixtureSpec(sig, n_points=500, n_clusters=8, n_classes=4, seed=7))
        am = compute_angles(ds.X)
        tree = fit(am, ds.y, TreeHyperparams(max_depth=6))
        leaf = tree.leaf_ids(am.angles)
        ok_rows = np.flatnonzero(_margins(tree, am.angles) >= EPS)
        groups = [g for g in (ok_rows[leaf[ok_rows] == k] for k in np.unique(leaf)) if len(g) >= 2]
        samples = violations = 0
        ts = np.linspace(0.0, 1.0, 12)[1:-1]
        while samples < 1000:
            g = groups[rng.integers(len(groups))]
            i, j = rng.choice(g, 2, replace=False)
            pts = geodesic_point(ds.signature, ds.X.coords[i], ds.X.coords[j], ts)
            got = tree.leaf_ids(compute_angles(PointBatch(ds.signature, pts)).angles)
            violations += int(np.sum(got != leaf[i]))
            samples += len(ts)
        total_violations += violations
        report.append(f"{sig} {violations}/{samples}")
    verdict(7, "geodesic convexity", total_violations == 0,
            f"violations {', '.join(report)} ({len(tree.leaves())} leaves in last tree)", capsys)


# ---------------------------------------------------------------- 8

def test_8_attribution(capsys):
    parts = {name: sample_mixture(MixtureSpec(name, n_points=1000, seed=80 + k))
             for k, name in enumerate(("H2", "E2", "S2"))}
    X = concat_batches(d.X for d in parts.values())
    am = compute_angles(X)
    fracs = {}
    for target, (name, d) in enumerate(parts.items()):
        tree = fit(am, d.y, TreeHyperparams())
        fracs[name] = component_attribution(tree)[target]
    verdict(8, "spurious-component attribution", min(fracs.values()) >= 0.6,
            ", ".join(f"{k} {100 * v:.0f}%" for k, v in fracs.items()) + " (need >= 60% each)", capsys)


# ---------------------------------------------------------------- 9

def _inner(comp, u, v):
    return minkowski(u, v) if comp.kind is Kind.HYPERBOLOID else dot(u, v)


def _rel_err(actual, expected):
    mag = np.maximum(1.0, np.linalg.norm(expected, axis=-1))
    return float(np.max(np.linalg.norm(actual - expected, axis=-1) / mag))


def test_9_geometry_suite(capsys):
    rng = np.random.default_rng(9)
    failures = []
    for comp in COMPONENTS:
        u, v, w = (random_points(comp, 1000, rng) for _ in range(3))
        if not (np.all(np.abs(distance(comp, u, u)) <= 1e-9 * max(1.0, 1 / comp.scale))
                and np.array_equal(distance(comp, u, v), distance(comp, v, u))
                and np.all(distance(comp, u, w) <= distance(comp, u, v) + distance(comp, v, w) + 1e-9)):
            failures.append(f"{comp} metric axioms")
        p, q = random_points(comp, 500, rng, 0.8), random_points(comp, 500, rng, 0.8)
        if _rel_err(exp_map(comp, p, log_map(comp, p, q), check=False), q) > 1e-8:
            failures.append(f"{comp} exp(log)")
        t = random_tangent(comp, p, rng, 0.7)
        if comp.kind is Kind.SPHERE:
            nrm = np.linalg.norm(t, axis=1, keepdims=True) * comp.scale
            t = np.where(nrm > 3.0, t * 3.0 / nrm, t)
        back = log_map(comp, p, exp_map(comp, p, t, check=False), check=False)
        err = np.linalg.norm(back - t, axis=1) / np.maximum(1.0, np.linalg.norm(p, axis=1))
        if np.max(err) > 1e-8 * max(1.0, float(np.max(np.linalg.norm(t, axis=1)))):
            failures.append(f"{comp} log(exp)")
        a, b = random_tangent(comp, p, rng), random_tangent(comp, p, rng)
        ta = parallel_transport(comp, p, q, a, check=False)
        tb = parallel_transport(comp, p, q, b, check=False)
        mag = np.maximum(1.0, np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        if np.any(np.abs(_inner(comp, ta, tb) - _inner(comp, a, b)) > 1e-8 * mag):
            failures.append(f"{comp} transport isometry")
    for sig in ("S2xE2xH2", "H4", "S4", "E4", "S1xS1xH3(-2)"):
        ds = sample_mixture(MixtureSpec(sig, n_points=500, seed=9))
        if validate(ds.X, tol=1e-8):
            failures.append(f"{sig} sampler closure")
    verdict(9, "geometry invariants", not failures,
            "all green" if not failures else "; ".join(failures), capsys)


# ---------------------------------------------------------------- 10

def test_10_benchmark_determinism(tmp_path, capsys):
    suite = ROOT / "configs" / "suite.json"
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = (main(["benchmark", str(suite), "--out", str(a), "--threads", "1"]),
             main(["benchmark", str(suite), "--out", str(b), "--threads", "4"]))
    same = codes == (0, 0) and a.read_bytes() == b.read_bytes()
    verdict(10, "benchmark determinism", same,
            f"exit codes {codes}, results CSV {'byte-identical' if same else 'differs'} across --threads 1/4",
            capsys)
