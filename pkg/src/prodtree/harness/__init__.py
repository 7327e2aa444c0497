"""Baselines, file I/O, experiments and the command line."""

from .baselines import accuracy, ambient_features, ci_halfwidth, knn_predict, metrics, rmse, tangent_features
from .experiment import (
    ExperimentConfig,
    MetricReport,
    Model,
    ModelKind,
    fit_model,
    run_experiment,
    train_test_split,
)
from .io import DataError
from .linkpred import build_link_prediction_dataset
