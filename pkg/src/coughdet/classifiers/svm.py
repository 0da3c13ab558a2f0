"""Gaussian-kernel SVM trained by SMO with second-order working-set selection."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from coughdet.classifiers.base import ModelError, Standardizer, TrainedModel, check_binary
from coughdet.features.matrix import FeatureMatrix

DEFAULT_C = 10.0
KKT_TOL = 1e-3
TAU = 1e-12
MAX_ITER = 1_000_000
FULL_KERNEL_LIMIT = 4000
CACHE_ROWS = 2000


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d = (a ** 2).sum(axis=1)[:, None] - 2.0 * a @ b.T + (b ** 2).sum(axis=1)[None, :]
    return np.exp(-gamma * np.maximum(d, 0.0))


class _KernelRows:
    """Kernel matrix rows on demand; dense when small, LRU-cached otherwise."""

    def __init__(self, x: np.ndarray, gamma: float):
        self.x = x
        self.gamma = gamma
        self.sq = (x ** 2).sum(axis=1)
        self.full = rbf_kernel(x, x, gamma) if len(x) <= FULL_KERNEL_LIMIT else None
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        if i in self.cache:
            self.cache.move_to_end(i)
            return self.cache[i]
        d = self.sq - 2.0 * self.x @ self.x[i] + self.sq[i]
        r = np.exp(-self.gamma * np.maximum(d, 0.0))
        self.cache[i] = r
        if len(self.cache) > CACHE_ROWS:
            self.cache.popitem(last=False)
        return r


def smo(x: np.ndarray, y: np.ndarray, c: float, gamma: float, tol: float = KKT_TOL,
        max_iter: int = MAX_ITER) -> tuple[np.ndarray, float, int]:
    """Solve the soft-margin dual.

    Args:
        x: training rows, shape (n, d).
        y: labels in {-1, +1}.
        c: box constraint.
        gamma: kernel width in exp(-gamma * |a - b|^2).
        tol: stopping gap between the most violating pair.

    Returns:
        (alpha, bias, iterations)
    """
    n = len(x)
    y = np.asarray(y, dtype=float)
    k = _KernelRows(x, gamma)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    diag = np.ones(n)   # RBF: K(x, x) = 1

    it = 0
    while it < max_iter:
        minus_yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(minus_yg[up])])
        g_max = minus_yg[i]
        g_min = minus_yg[low].min()
        if g_max - g_min < tol:
            break

        k_i = k.row(i)
        b = g_max - minus_yg
        cand = low & (b > 0)
        if not cand.any():
            break
        a = np.maximum(diag[i] + diag - 2.0 * k_i, TAU)
        obj = np.full(n, np.inf)
        obj[cand] = -(b[cand] ** 2) / a[cand]
        j = int(np.argmin(obj))
        k_j = k.row(j)

        old_i, old_j = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * k_i[j], TAU)
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0 and alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, diff
            elif diff <= 0 and alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0 and alpha[i] > c:
                alpha[i], alpha[j] = c, c - diff
            elif diff <= 0 and alpha[j] > c:
                alpha[j], alpha[i] = c, c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            alpha[i] -= delta
            alpha[j] += delta
            if total > c and alpha[i] > c:
                alpha[i], alpha[j] = c, total - c
            elif total <= c and alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > c and alpha[j] > c:
                alpha[j], alpha[i] = c, total - c
            elif total <= c and alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total

        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (y[i] * d_i * k_i + y[j] * d_j * k_j)
        it += 1

    alpha = np.clip(alpha, 0.0, c)
    return alpha, _bias(alpha, y, grad, c), it


def _bias(alpha: np.ndarray, y: np.ndarray, grad: np.ndarray, c: float) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        rho = yg[free].mean()
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        ub = yg[low].min() if low.any() else np.inf
        lb = yg[up].max() if up.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub + lb) else 0.0
    return float(-rho)


def train_svm(matrix: FeatureMatrix, c: float = DEFAULT_C, gamma: float | None = None,
              seed: int = 0, tol: float = KKT_TOL) -> TrainedModel:
    """Fit on standardised features; ``gamma`` defaults to 1 / n_features.

    SMO here is deterministic, so ``seed`` only exists for a uniform trainer
    signature.
    """
    del seed
    check_binary(matrix)
    if c <= 0:
        raise ModelError(f"box constraint must be positive, got {c}")
    scaler = Standardizer.fit(matrix.values)
    x = scaler.transform(matrix.values)
    gamma = 1.0 / x.shape[1] if gamma is None else float(gamma)
    y = np.where(matrix.labels == 1, 1.0, -1.0)
    alpha, bias, _ = smo(x, y, c, gamma, tol)
    sv = alpha > 0
    params = {
        "support_vectors": x[sv],
        "dual_coef": alpha[sv] * y[sv],
        "bias": bias,
        "gamma": gamma,
        "c": float(c),
    }
    return TrainedModel("svm", matrix.names, scaler, params)


def score_standardized(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    p = model.params
    sv = np.atleast_2d(p["support_vectors"])
    if sv.size == 0:
        return np.full(len(x), p["bias"])
    out = np.empty(len(x))
    for start in range(0, len(x), 4096):
        chunk = x[start:start + 4096]
        out[start:start + 4096] = rbf_kernel(chunk, sv, p["gamma"]) @ p["dual_coef"] + p["bias"]
    return out


def score_svm(model: TrainedModel, rows, names=None) -> np.ndarray:
    """Decision value sum_i alpha_i y_i k(x_i, x) + b."""
    return score_standardized(model, model.prepare(rows, names))
