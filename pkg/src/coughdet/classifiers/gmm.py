"""K-means initialised diagonal-covariance Gaussian mixtures, one per class.

The frame score is the class log-likelihood ratio plus the log prior ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from coughdet.classifiers.base import ModelError, Standardizer, TrainedModel, check_binary
from coughdet.features.matrix import FeatureMatrix

VAR_FLOOR = 1e-6
KMEANS_MAX_ITER = 100
EM_MAX_ITER = 200
EM_TOL = 1e-6  # mean log-likelihood gain per frame
LOG_2PI = np.log(2.0 * np.pi)


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (x ** 2).sum(axis=1)[:, None] - 2.0 * x @ centers.T + (centers ** 2).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _pick(weights: np.ndarray, u: float) -> int:
    cdf = np.cumsum(weights)
    return int(min(np.searchsorted(cdf, u * cdf[-1], side="right"), len(weights) - 1))


def kmeans(points, k: int, seed: int = 0) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Runs until assignments stop changing or 100 iterations. A cluster that
    loses all its points is moved to the point farthest from its own centre.

    Returns:
        Centres, shape (k, n_features).
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if k < 1 or k > len(x):
        raise ModelError(f"k={k} clusters requested for {len(x)} points")
    if k > len(np.unique(x, axis=0)):
        raise ModelError(f"k={k} exceeds the number of distinct points")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, x.shape[1]))
    centers[0] = x[_pick(np.ones(len(x)), rng.random())]
    closest = _sq_dists(x, centers[:1])[:, 0]
    for c in range(1, k):
        centers[c] = x[_pick(closest, rng.random()) if closest.sum() > 0 else 0]
        closest = np.minimum(closest, _sq_dists(x, centers[c:c + 1])[:, 0])

    assign = None
    for _ in range(KMEANS_MAX_ITER):
        d = _sq_dists(x, centers)
        new_assign = np.argmin(d, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                far = int(np.argmax(d[np.arange(len(x)), assign]))
                centers[c] = x[far]
                assign[far] = c
                d[far] = 0.0
    return centers


@dataclass
class DiagonalGmm:
    weights: np.ndarray    # (G,)
    means: np.ndarray      # (G, D)
    variances: np.ndarray  # (G, D)

    def component_log_density(self, x: np.ndarray) -> np.ndarray:
        """log w_g + log N(x | mu_g, diag var_g), shape (n, G)."""
        inv = 1.0 / self.variances
        quad = (x ** 2) @ inv.T - 2.0 * x @ (self.means * inv).T + ((self.means ** 2) * inv).sum(axis=1)
        log_det = np.log(self.variances).sum(axis=1)
        d = x.shape[1]
        return np.log(self.weights) - 0.5 * (d * LOG_2PI + log_det + quad)

    def log_density(self, x: np.ndarray) -> np.ndarray:
        return logsumexp(self.component_log_density(x), axis=1)


def fit_diag_gmm(x, n_components: int, seed: int = 0, max_iter: int = EM_MAX_ITER,
                 tol: float = EM_TOL, var_floor: float = VAR_FLOOR) -> tuple[DiagonalGmm, list[float]]:
    """EM for a diagonal Gaussian mixture, initialised from k-means clusters.

    Returns the model and the total training log-likelihood before each
    M-step (non-decreasing). The variance floor is applied inside the M-step,
    which keeps every update a constrained maximiser.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    centers = kmeans(x, n_components, seed)
    assign = np.argmin(_sq_dists(x, centers), axis=1)
    resp = np.zeros((n, n_components))
    resp[np.arange(n), assign] = 1.0
    gmm = _m_step(x, resp, var_floor)
    gmm.means = np.where(resp.sum(axis=0)[:, None] > 0, gmm.means, centers)

    history: list[float] = []
    for _ in range(max_iter):
        log_comp = gmm.component_log_density(x)
        log_tot = logsumexp(log_comp, axis=1)
        ll = float(log_tot.sum())
        history.append(ll)
        if len(history) > 1 and (history[-1] - history[-2]) / n < tol:
            break
        resp = np.exp(log_comp - log_tot[:, None])
        gmm = _m_step(x, resp, var_floor, previous=gmm)
    return gmm, history


def _m_step(x: np.ndarray, resp: np.ndarray, var_floor: float, previous: DiagonalGmm | None = None) -> DiagonalGmm:
    nk = resp.sum(axis=0)
    empty = nk <= 0
    safe = np.where(empty, 1.0, nk)
    means = (resp.T @ x) / safe[:, None]
    variances = np.empty_like(means)
    for g in range(len(nk)):
        variances[g] = resp[:, g] @ (x - means[g]) ** 2 / safe[g]
    variances = np.maximum(variances, var_floor)
    weights = nk / nk.sum()
    if empty.any():
        # A component with no responsibility keeps its parameters but has zero weight.
        weights = np.where(empty, np.finfo(float).tiny, weights)
        weights /= weights.sum()
        if previous is not None:
            means[empty] = previous.means[empty]
            variances[empty] = previous.variances[empty]
        else:
            variances[empty] = 1.0
    return DiagonalGmm(weights, means, variances)


def train_gmm(matrix: FeatureMatrix, n_gaussians: int, seed: int = 0, priors=None) -> TrainedModel:
    """One mixture per class on standardised features.

    ``priors`` is (p_noncough, p_cough); by default the training class frequencies.
    """
    check_binary(matrix)
    scaler = Standardizer.fit(matrix.values)
    x = scaler.transform(matrix.values)
    params: dict = {"n_gaussians": int(n_gaussians)}
    counts = np.bincount(matrix.labels, minlength=2)
    for cls in (0, 1):
        if counts[cls] < n_gaussians:
            raise ModelError(f"class {cls} has {counts[cls]} frames, fewer than {n_gaussians} Gaussians")
        gmm, _ = fit_diag_gmm(x[matrix.labels == cls], n_gaussians, seed + cls)
        params[f"weights_{cls}"] = gmm.weights
        params[f"means_{cls}"] = gmm.means
        params[f"variances_{cls}"] = gmm.variances
    p = counts / counts.sum() if priors is None else np.asarray(priors, dtype=float)
    params["log_prior_0"] = float(np.log(p[0]))
    params["log_prior_1"] = float(np.log(p[1]))
    return TrainedModel("gmm", matrix.names, scaler, params)


def class_mixture(model: TrainedModel, cls: int) -> DiagonalGmm:
    p = model.params
    return DiagonalGmm(np.asarray(p[f"weights_{cls}"]), np.asarray(p[f"means_{cls}"]),
                       np.asarray(p[f"variances_{cls}"]))


def score_standardized(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    p = model.params
    cough = class_mixture(model, 1).log_density(x) + p["log_prior_1"]
    other = class_mixture(model, 0).log_density(x) + p["log_prior_0"]
    return cough - other


def score_gmm(model: TrainedModel, rows, names=None) -> np.ndarray:
    """log p(x|cough) + log P(cough) - log p(x|non-cough) - log P(non-cough)."""
    return score_standardized(model, model.prepare(rows, names))
