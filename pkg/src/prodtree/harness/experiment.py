"""Models with their preprocessing, train/test splitting, and seeded evaluation."""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..angular import AngleMatrix, angles_of, feature_map
from ..cart import DecisionTree, Task, TreeHyperparams, fit, fit_classical
from ..forest import Forest, ForestHyperparams, fit_forest
from ..geometry import PointBatch, Signature
from ..sampler import Dataset, MixtureSpec, sample_mixture
from .baselines import ambient_features, ci_halfwidth, knn_predict, metrics, tangent_features
from .io import DataError, load_signature, read_points_csv


class ModelKind(str, enum.Enum):
    PRODUCT_DT = "ProductDT"
    PRODUCT_RF = "ProductRF"
    AMBIENT_DT = "AmbientDT"
    AMBIENT_RF = "AmbientRF"
    TANGENT_DT = "TangentDT"
    TANGENT_RF = "TangentRF"
    KNN = "KNN"

    @classmethod
    def parse(cls, text) -> "ModelKind":
        if isinstance(text, cls):
            return text
        for m in cls:
            if m.value.lower() == str(text).lower():
                return m
        raise ValueError(f"unknown model {text!r}; choose from {[m.value for m in cls]}")

    @property
    def preprocess(self) -> str:
        return {"P": "angles", "A": "ambient", "T": "tangent", "K": "points"}[self.value[0]]

    @property
    def is_forest(self) -> bool:
        return self.value.endswith("RF")


class Model:
    """A fitted estimator plus the preprocessing its inputs need."""

    def __init__(self, kind: ModelKind, signature: Signature, estimator=None, feature_mode="all_pairs",
                 k: int = 5, task: Task = Task.CLASSIFICATION, train_X=None, train_y=None):
        self.kind = kind
        self.signature = signature
        self.estimator = estimator
        self.feature_mode = feature_mode
        self.k = k
        self.task = Task(task)
        self.train_X = train_X
        self.train_y = train_y

    def features(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        pre = self.kind.preprocess
        if pre == "angles":
            return angles_of(X, self.signature, feature_map(self.signature, self.feature_mode))
        if pre == "ambient":
            return ambient_features(self.signature, X)[0]
        if pre == "tangent":
            return tangent_features(self.signature, X)[0]
        return X

    def predict(self, X) -> np.ndarray:
        if self.kind is ModelKind.KNN:
            return knn_predict(self.train_X, self.train_y, X, self.k, self.signature, self.task)
        return self.estimator.predict(self.features(X))

    def to_dict(self) -> dict:
        d = {"model": self.kind.value, "signature": self.signature.to_dict(),
             "feature_mode": str(getattr(self.feature_mode, "value", self.feature_mode)),
             "task": self.task.value}
        if self.kind is ModelKind.KNN:
            d.update(k=self.k, train_X=self.train_X.tolist(), train_y=self.train_y.tolist())
        elif self.kind.is_forest:
            d["forest"] = self.estimator.to_dict()
        else:
            d["tree"] = self.estimator.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        kind = ModelKind.parse(d["model"])
        sig = Signature.from_dict(d["signature"])
        if kind is ModelKind.KNN:
            return cls(kind, sig, None, d["feature_mode"], int(d["k"]), d["task"],
                       np.asarray(d["train_X"], dtype=float), np.asarray(d["train_y"]))
        est = Forest.from_dict(d["forest"]) if kind.is_forest else DecisionTree.from_dict(d["tree"])
        return cls(kind, sig, est, d["feature_mode"], task=d["task"])


def fit_model(kind: ModelKind | str, X: PointBatch, y, tree: TreeHyperparams | None = None,
              forest: ForestHyperparams | None = None, k: int = 5, n_threads: int = 1) -> Model:
    kind = ModelKind.parse(kind) if isinstance(kind, str) else kind
    tree = tree or TreeHyperparams()
    sig = X.signature
    y = np.asarray(y)
    if kind is ModelKind.KNN:
        return Model(kind, sig, None, tree.feature_mode, k, tree.task, X.coords.copy(), y.copy())
    model = Model(kind, sig, None, tree.feature_mode, task=tree.task)
    if kind.preprocess == "angles":
        data = AngleMatrix(model.features(X.coords), feature_map(sig, tree.feature_mode),
                           tree.feature_mode, sig)
        comps = None
    elif kind.preprocess == "ambient":
        data, comps = ambient_features(sig, X.coords)
    else:
        data, comps = tangent_features(sig, X.coords)
    if kind.is_forest:
        fh = forest or ForestHyperparams()
        fh = ForestHyperparams(tree, fh.n_estimators, fh.max_features, fh.bootstrap, fh.seed)
        model.estimator = fit_forest(data, y, fh, n_threads=n_threads, feature_components=comps)
    elif comps is None:
        model.estimator = fit(data, y, tree)
    else:
        model.estimator = fit_classical(data, y, tree, feature_components=comps)
    return model


def train_test_split(ds: Dataset, fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, first ``round(fraction * n)`` rows train. No stratification."""
    if not 0 < fraction < 1:
        raise ValueError("split fraction must lie in (0, 1)")
    n = len(ds)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fraction * n))
    if not 0 < n_train < n:
        raise ValueError(f"split of {n} rows at {fraction} leaves an empty side")
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


@dataclass
class ExperimentConfig:
    model: ModelKind
    sampler: MixtureSpec | None = None
    csv: str | None = None
    signature: Signature | None = None
    name: str = ""
    k: int = 5
    split: float = 0.8
    n_seeds: int = 10
    seed: int = 0
    tree: TreeHyperparams = field(default_factory=TreeHyperparams)
    forest: ForestHyperparams = field(default_factory=ForestHyperparams)

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = ModelKind.parse(self.model)
        if (self.sampler is None) == (self.csv is None):
            raise ValueError("config needs exactly one data source: 'sampler' or 'csv'")
        if self.sampler is not None:
            self.signature = self.sampler.signature
            self.tree.task = self.sampler.task
        elif self.signature is None:
            raise ValueError("a csv data source needs a 'signature'")
        if not 0 < self.split < 1:
            raise ValueError("split fraction must lie in (0, 1)")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if not self.name:
            self.name = "gaussian" if self.sampler is not None else Path(self.csv).stem

    @property
    def metric(self) -> str:
        return "accuracy" if self.tree.task is Task.CLASSIFICATION else "rmse"

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        d = dict(d)
        if "model" not in d:
            raise ValueError("config: missing field 'model'")
        tree = TreeHyperparams.from_dict(d.pop("tree", {}))
        fdict = dict(d.pop("forest", {}))
        fdict.pop("tree", None)
        forest = ForestHyperparams.from_dict(fdict)
        sampler = d.pop("sampler", None)
        if sampler is not None:
            sampler = MixtureSpec.from_dict(sampler)
            tree.task = sampler.task
        sig = d.pop("signature", None)
        if sig is not None:
            sig = load_signature(sig)
        csv = d.pop("csv", None)
        if csv is not None and base_dir is not None and not Path(csv).is_absolute():
            csv = str(Path(base_dir) / csv)
        if "task" in d:
            tree.task = Task(d.pop("task"))
        extra = set(d) - {"model", "name", "k", "split", "n_seeds", "seed"}
        if extra:
            raise ValueError(f"config: unknown field(s) {sorted(extra)}")
        return cls(sampler=sampler, csv=csv, signature=sig, tree=tree, forest=forest, **d)

    def to_dict(self) -> dict:
        return {"name": self.name, "model": self.model.value,
                "sampler": None if self.sampler is None else self.sampler.to_dict(),
                "csv": self.csv, "signature": self.signature.to_dict(), "k": self.k,
                "split": self.split, "n_seeds": self.n_seeds, "seed": self.seed,
                "tree": self.tree.to_dict(), "forest": {k: v for k, v in self.forest.to_dict().items() if k != "tree"}}


@dataclass
class MetricReport:
    metric: str
    scores: list[float]
    mean: float
    ci_halfwidth: float
    seconds_fit: float
    seconds_predict: float
    seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"metric": self.metric, "scores": self.scores, "mean": self.mean,
                "ci_halfwidth": self.ci_halfwidth, "seeds": self.seeds,
                "seconds_fit": self.seconds_fit, "seconds_predict": self.seconds_predict}


def _load_dataset(cfg: ExperimentConfig, seed: int, cache: dict) -> Dataset:
    if cfg.sampler is not None:
        spec = MixtureSpec(**{**cfg.sampler.__dict__, "seed": seed})
        return sample_mixture(spec)
    if "csv" not in cache:
        batch, labels = read_points_csv(cfg.csv, cfg.signature)
        if labels is None:
            raise DataError(f"{cfg.csv}: no 'label' column")
        cache["csv"] = Dataset(batch, labels, cfg.tree.task)
    return cache["csv"]


def run_seed(cfg: ExperimentConfig, seed: int, cache: dict | None = None, n_threads: int = 1):
    """(score, fit seconds, predict seconds) for one seed."""
    ds = _load_dataset(cfg, seed, {} if cache is None else cache)
    train, test = train_test_split(ds, cfg.split, seed)
    tree = TreeHyperparams(**{**cfg.tree.__dict__, "seed": seed})
    forest = ForestHyperparams(tree, cfg.forest.n_estimators, cfg.forest.max_features,
                               cfg.forest.bootstrap, seed)
    t0 = time.perf_counter()
    model = fit_model(cfg.model, train.X, train.y, tree, forest, cfg.k, n_threads)
    t1 = time.perf_counter()
    pred = model.predict(test.X.coords)
    t2 = time.perf_counter()
    return metrics(pred, test.y, cfg.metric), t1 - t0, t2 - t1


def run_experiment(cfg: ExperimentConfig, n_threads: int = 1) -> MetricReport:
    """Evaluate ``cfg.model`` over seeds ``cfg.seed .. cfg.seed + n_seeds - 1``.

    Seed ``s`` drives the sampler, the split and the model, so every reported
    number is independent of ``n_threads``.
    """
    seeds = [cfg.seed + i for i in range(cfg.n_seeds)]
    cache: dict = {}
    if cfg.csv is not None:
        _load_dataset(cfg, seeds[0], cache)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(lambda s: run_seed(cfg, s, cache), seeds))
    else:
        results = [run_seed(cfg, s, cache) for s in seeds]
    scores = [r[0] for r in results]
    return MetricReport(cfg.metric, scores, float(np.mean(scores)), ci_halfwidth(scores),
                        float(sum(r[1] for r in results)), float(sum(r[2] for r in results)), seeds)
