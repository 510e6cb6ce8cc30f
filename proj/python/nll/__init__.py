"""Nonlinear level set learning: RevNet transforms, losses, Active Subspaces
and the experiment pipeline, backed by the C++ core."""

import json

from . import _nll
from ._nll import (  # noqa: F401
    Dataset,
    Method,
    Model,
    NumericalError,
    RevNet,
    SampleSet,
    ValidationError,
    active_subspace,
    burgers_k,
    f4,
    f5,
    loss_gradient,
    r0,
    reference_row,
    rl1,
    rl2,
    rrmse,
    sensitivity_percent,
    table_plan,
)


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def default_config(problem, method="new_nll"):
    """Published settings for a problem and method, as a dict."""
    return json.loads(_nll.default_config(problem, method))


def generate_dataset(config):
    return _nll.generate_dataset(_text(config))


def train_model(config, dataset):
    """Returns (final model, best-validation model, trace rows).

    Trace rows are (epoch, train_loss, valid_loss, train_pct, valid_pct)."""
    return _nll.train_model(_text(config), dataset)


def evaluate_model(config, dataset, model):
    return _nll.evaluate_model(_text(config), dataset, model)


def run(config):
    """Generate, train and evaluate in one go; returns the table row."""
    data = generate_dataset(config)
    model, _, _ = train_model(config, data)
    row = evaluate_model(config, data, model)
    return {k: row[k] for k in ("problem", "method", "samples", "sens_pct", "rrmse_pct",
                                "rl1_pct", "rl2_pct")}
