"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..angular import FeatureMode, MidpointMode, compute_angles
from ..cart import Task, TreeHyperparams, component_attribution
from ..forest import ForestHyperparams
from ..geometry import ManifoldError
from ..sampler import MixtureSpec, sample_mixture
from .experiment import ExperimentConfig, Model, ModelKind, fit_model, run_experiment
from .io import (
    DataError,
    dump_json,
    load_json,
    load_signature,
    read_edges_csv,
    read_points_csv,
    write_labels_csv,
    write_points_csv,
)
from .linkpred import build_link_prediction_dataset

log = logging.getLogger("prodtree")

RESULT_COLUMNS = ["dataset", "signature", "model", "metric", "mean", "ci_halfwidth",
                  "seconds_fit", "seconds_predict"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_arg(text: str):
    """Inline JSON, or a path to a JSON file."""
    t = text.strip()
    if t.startswith("{") or t.startswith("["):
        try:
            return json.loads(t)
        except json.JSONDecodeError as e:
            raise DataError(f"invalid JSON argument ({e})") from None
    return load_json(t)


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


# --------------------------------------------------------------------------
# subcommands

def cmd_sample(args) -> None:
    d = dict(_json_arg(args.spec))
    if args.seed is not None:
        d["seed"] = args.seed
    spec = MixtureSpec.from_dict(d)
    ds = sample_mixture(spec)
    if args.out is None:
        raise UsageError("sample: --out is required")
    write_points_csv(args.out, ds.X, ds.y)
    dump_json({"spec": spec.to_dict(), **ds.ground_truth()}, str(args.out) + ".truth.json")


def _hyperparams(args):
    h = dict(_json_arg(args.hyperparams)) if args.hyperparams else {}
    extra = set(h) - {"tree", "forest", "k"}
    if extra:
        raise DataError(f"hyperparams: unknown field(s) {sorted(extra)}")
    tree = dict(h.get("tree", {}))
    forest = dict(h.get("forest", {}))
    forest.pop("tree", None)
    for key, val in (("task", args.task), ("max_depth", args.max_depth),
                     ("feature_mode", args.feature_mode), ("midpoint_mode", args.midpoint_mode)):
        if val is not None:
            tree[key] = val
    if args.n_estimators is not None:
        forest["n_estimators"] = args.n_estimators
    if args.max_features is not None:
        mf = args.max_features
        forest["max_features"] = int(mf) if mf.isdigit() else mf
    if args.seed is not None:
        tree["seed"] = forest["seed"] = args.seed
    return TreeHyperparams.from_dict(tree), ForestHyperparams.from_dict(forest), int(h.get("k", args.k))


def cmd_fit(args) -> None:
    sig = load_signature(args.signature)
    batch, labels = read_points_csv(args.data, sig)
    if labels is None:
        raise DataError(f"{args.data}: no 'label' column to fit on")
    tree, forest, k = _hyperparams(args)
    if args.dump_angles:
        am = compute_angles(batch, tree.feature_mode)
        with open(args.dump_angles, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"a{f.component}_{f.i}_{f.j}" for f in am.features])
            w.writerows([[repr(float(v)) for v in row] for row in am.angles])
    model = fit_model(ModelKind.parse(args.model), batch, labels, tree, forest, k, args.threads)
    _emit(dump_json(model.to_dict()), args.out)


def _load_model(path) -> Model:
    try:
        return Model.from_dict(load_json(path))
    except (KeyError, TypeError) as e:
        raise DataError(f"{path}: malformed model JSON ({e})") from None


def cmd_predict(args) -> None:
    model = _load_model(args.model)
    batch, _ = read_points_csv(args.data, model.signature)
    pred = model.predict(batch.coords)
    if args.out is None:
        buf = io.StringIO()
        buf.write("prediction\n")
        for v in pred:
            buf.write(f"{repr(float(v)) if isinstance(v, (float, np.floating)) else int(v)}\n")
        sys.stdout.write(buf.getvalue())
    else:
        write_labels_csv(args.out, pred)


def _config(d: dict, base_dir, args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_dict(d, base_dir)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_evaluate(args) -> None:
    path = Path(args.config)
    cfg = _config(load_json(path), path.parent, args)
    report = run_experiment(cfg, args.threads)
    _emit(dump_json({"name": cfg.name, "model": cfg.model.value,
                     "signature": str(cfg.signature), **report.to_dict()}), args.out)


def cmd_benchmark(args) -> None:
    path = Path(args.suite)
    suite = load_json(path)
    entries = suite.get("configs") if isinstance(suite, dict) else suite
    if not isinstance(entries, list) or not entries:
        raise DataError(f"{path}: expected a non-empty list of configs (or {{'configs': [...]}})")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for i, d in enumerate(entries):
        try:
            cfg = _config(d, path.parent, args)
        except ValueError as e:
            raise DataError(f"{path}: configs[{i}]: {e}") from None
        rep = run_experiment(cfg, args.threads)
        fit_s = repr(rep.seconds_fit) if args.timings else ""
        pred_s = repr(rep.seconds_predict) if args.timings else ""
        w.writerow([cfg.name, str(cfg.signature), cfg.model.value, rep.metric,
                    repr(rep.mean), repr(rep.ci_halfwidth), fit_s, pred_s])
    _emit(buf.getvalue(), args.out)


def cmd_linkpred(args) -> None:
    sig = load_signature(args.signature)
    batch, _ = read_points_csv(args.embeddings, sig)
    edges = read_edges_csv(args.edges)
    try:
        ds = build_link_prediction_dataset(batch, edges, ordered=not args.undirected,
                                           self_pairs=not args.no_self)
    except ValueError as e:
        raise DataError(str(e)) from None
    if args.out is None:
        raise UsageError("linkpred: --out is required")
    write_points_csv(args.out, ds.X, ds.y)
    dump_json(ds.signature.to_dict(), str(args.out) + ".signature.json")


def cmd_attribution(args) -> None:
    model = _load_model(args.model)
    if model.estimator is None:
        raise DataError("attribution needs a tree or forest model, not k-NN")
    try:
        frac = component_attribution(model.estimator)
    except ValueError as e:
        raise DataError(str(e)) from None
    _emit(dump_json({str(c): v for c, v in sorted(frac.items())}), args.out)


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed")
    common.add_argument("--out", default=None, help="output path (default: stdout where possible)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="prodtree", description="Decision trees and forests on product manifolds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common], help="sample a Gaussian mixture to CSV")
    s.add_argument("spec", help="mixture spec JSON (file or inline)")
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", parents=[common], help="fit a model on a labelled CSV")
    f.add_argument("--data", required=True)
    f.add_argument("--signature", required=True, help="signature JSON file, inline JSON, or e.g. S2xH2")
    f.add_argument("--model", default="ProductDT", help=", ".join(m.value for m in ModelKind))
    f.add_argument("--hyperparams", default=None, help='JSON with optional "tree", "forest", "k"')
    f.add_argument("--task", choices=[t.value for t in Task], default=None)
    f.add_argument("--max-depth", type=int, default=None)
    f.add_argument("--feature-mode", choices=[m.value for m in FeatureMode], default=None)
    f.add_argument("--midpoint-mode", choices=[m.value for m in MidpointMode], default=None)
    f.add_argument("--n-estimators", type=int, default=None)
    f.add_argument("--max-features", default=None, help="sqrt, all, or a count")
    f.add_argument("--k", type=int, default=5, help="neighbours for KNN")
    f.add_argument("--dump-angles", default=None, help="also write the angle matrix CSV here")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("predict", parents=[common], help="predict labels for a CSV")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", parents=[common], help="run one experiment config")
    e.add_argument("config")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", parents=[common], help="run a suite of configs to a results CSV")
    b.add_argument("suite")
    b.add_argument("--timings", action="store_true", help="fill the seconds_* columns")
    b.set_defaults(func=cmd_benchmark)

    lp = sub.add_parser("linkpred", parents=[common], help="build a link-prediction dataset")
    lp.add_argument("--embeddings", required=True)
    lp.add_argument("--signature", required=True)
    lp.add_argument("--edges", required=True)
    lp.add_argument("--undirected", action="store_true", help="keep only pairs i <= j")
    lp.add_argument("--no-self", action="store_true", help="drop pairs i == i")
    lp.set_defaults(func=cmd_linkpred)

    a = sub.add_parser("attribution", parents=[common], help="per-component split fractions")
    a.add_argument("model")
    a.set_defaults(func=cmd_attribution)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataError, ManifoldError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
