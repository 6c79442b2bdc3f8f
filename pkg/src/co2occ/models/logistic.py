"""Logistic-regression baseline on raw window values.

Full-batch gradient descent with Armijo backtracking line search; no
regularization. Inputs are standardized with the fit set's scalar
mean/std, mirroring the network's normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import WindowSet
from ..errors import DegenerateDataError, DomainError
from .layers import sigmoid

GRAD_TOL = 1e-6
MAX_ITERATIONS = 10_000
ARMIJO_C = 0.5
MIN_STEP = 1e-12


@dataclass
class LogisticWeights:
    w: np.ndarray
    b: float
    norm_mean: float
    norm_std: float
    iterations: int = 0


def _loss_grad(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float):
    z = x @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    r = (sigmoid(z) - y) / len(y)
    return loss, x.T @ r, float(r.sum())


def fit_logistic(samples: WindowSet) -> LogisticWeights:
    y = samples.labels.astype(float)
    if len(np.unique(samples.labels)) < 2:
        raise DegenerateDataError("all labels identical, nothing to separate")
    mean = float(samples.inputs.mean())
    std = float(samples.inputs.std())
    if std == 0.0:
        raise DomainError("inputs are constant")
    x = (samples.inputs - mean) / std

    w = np.zeros(x.shape[1])
    b = 0.0
    loss, gw, gb = _loss_grad(x, y, w, b)
    it = 0
    for it in range(1, MAX_ITERATIONS + 1):
        gnorm_sq = float(gw @ gw + gb * gb)
        if np.sqrt(gnorm_sq) < GRAD_TOL:
            break
        step = 1.0
        improved = False
        while step > MIN_STEP:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss, new_gw, new_gb = _loss_grad(x, y, w_new, b_new)
            if new_loss <= loss - ARMIJO_C * step * gnorm_sq:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
    return LogisticWeights(w, b, mean, std, iterations=it)


def predict_logistic(weights: LogisticWeights, inputs: np.ndarray) -> np.ndarray:
    """Hard labels: present (1) iff the modeled probability is >= 0.5."""
    single = inputs.ndim == 1
    x = (np.atleast_2d(inputs) - weights.norm_mean) / weights.norm_std
    labels = (sigmoid(x @ weights.w + weights.b) >= 0.5).astype(np.int64)
    return labels[0] if single else labels
