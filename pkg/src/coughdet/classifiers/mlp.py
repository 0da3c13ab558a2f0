"""One-hidden-layer perceptron (tanh hidden units, sigmoid output).

Trained full-batch on mean binary cross-entropy with momentum gradient descent.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from coughdet.classifiers.base import ModelError, Standardizer, TrainedModel, check_binary
from coughdet.features.matrix import FeatureMatrix

LEARNING_RATE = 0.01
MOMENTUM = 0.9
MAX_EPOCHS = 500
MIN_IMPROVEMENT = 1e-7

PARAM_NAMES = ("w_hidden", "b_hidden", "w_out", "b_out")


def init_params(n_inputs: int, n_hidden: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Uniform(+-1/sqrt(fan_in)) initialisation."""
    rng = np.random.default_rng(seed)
    lim_h = 1.0 / np.sqrt(n_inputs)
    lim_o = 1.0 / np.sqrt(n_hidden)
    return {
        "w_hidden": rng.uniform(-lim_h, lim_h, size=(n_inputs, n_hidden)),
        "b_hidden": rng.uniform(-lim_h, lim_h, size=n_hidden),
        "w_out": rng.uniform(-lim_o, lim_o, size=n_hidden),
        "b_out": np.array([rng.uniform(-lim_o, lim_o)]),
    }


def pre_activation(params, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden activations and output logit."""
    hidden = np.tanh(x @ params["w_hidden"] + params["b_hidden"])
    return hidden, hidden @ params["w_out"] + params["b_out"][0]


def loss_and_grad(params, x: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its gradient with respect to every parameter."""
    n = len(x)
    hidden, logit = pre_activation(params, x)
    # log(1 + e^z) - y z, written to stay finite for large |z|
    loss = float(np.mean(np.logaddexp(0.0, logit) - y * logit))
    d_logit = (expit(logit) - y) / n
    d_hidden = np.outer(d_logit, params["w_out"]) * (1.0 - hidden ** 2)
    grad = {
        "w_hidden": x.T @ d_hidden,
        "b_hidden": d_hidden.sum(axis=0),
        "w_out": hidden.T @ d_logit,
        "b_out": np.array([d_logit.sum()]),
    }
    return loss, grad


def fit_mlp(x, y, n_hidden: int, seed: int = 0, learning_rate: float = LEARNING_RATE,
            momentum: float = MOMENTUM, max_epochs: int = MAX_EPOCHS,
            min_improvement: float = MIN_IMPROVEMENT) -> tuple[dict[str, np.ndarray], list[float]]:
    """Train on already-scaled inputs; returns parameters and the loss per epoch.

    Stops after ``max_epochs`` or once an epoch lowers the loss by less than
    ``min_improvement`` (an increase caused by momentum does not stop it).
    """
    if n_hidden < 1:
        raise ModelError(f"need at least one hidden neuron, got {n_hidden}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    params = init_params(x.shape[1], n_hidden, seed)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    losses: list[float] = []
    for _ in range(max_epochs):
        loss, grad = loss_and_grad(params, x, y)
        if losses and 0.0 <= losses[-1] - loss < min_improvement:
            losses.append(loss)
            break
        losses.append(loss)
        for k in params:
            velocity[k] = momentum * velocity[k] - learning_rate * grad[k]
            params[k] = params[k] + velocity[k]
    return params, losses


def train_mlp(matrix: FeatureMatrix, n_hidden: int, seed: int = 0, **options) -> TrainedModel:
    check_binary(matrix)
    scaler = Standardizer.fit(matrix.values)
    params, _ = fit_mlp(scaler.transform(matrix.values), matrix.labels, n_hidden, seed, **options)
    return TrainedModel("mlp", matrix.names, scaler, params)


def score_standardized(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    _, logit = pre_activation(model.params, x)
    return expit(logit)


def score_mlp(model: TrainedModel, rows, names=None) -> np.ndarray:
    """Posterior-like output in (0, 1)."""
    return score_standardized(model, model.prepare(rows, names))
