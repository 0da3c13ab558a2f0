import numpy as np
import pytest

from coughdet.classifiers import (
    ModelError,
    fit_diag_gmm,
    fit_mlp,
    from_json,
    kmeans,
    load_model,
    save_model,
    smo,
    to_json,
    train,
    train_gmm,
    train_mlp,
    train_svm,
)
from coughdet.classifiers import gmm as gmm_mod
from coughdet.classifiers import mlp as mlp_mod
from coughdet.classifiers import svm as svm_mod
from coughdet.classifiers.mlp import init_params, loss_and_grad
from coughdet.features.matrix import FeatureMatrix


def blobs(n=200, d=2, sep=4.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    x = rng.standard_normal((n, d)) + sep * y[:, None] / np.sqrt(d)
    return FeatureMatrix(x, y, [f"f{i}" for i in range(d)])


def auc(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size


# --- k-means --------------------------------------------------------------

def test_kmeans_distinct_points_are_the_centres():
    pts = np.array([[0.0, 0.0], [5.0, 1.0], [-3.0, 4.0], [2.0, -7.0]])
    centres = kmeans(pts, 4, seed=3)
    assert sorted(map(tuple, centres)) == sorted(map(tuple, pts))


def test_kmeans_two_blobs():
    rng = np.random.default_rng(1)
    n, sigma = 500, 1.0
    a = rng.normal([0.0, 0.0], sigma, (n, 2))
    b = rng.normal([10.0, 10.0], sigma, (n, 2))
    centres = kmeans(np.vstack([a, b]), 2, seed=0)
    centres = centres[np.argsort(centres[:, 0])]
    bound = 3 * sigma / np.sqrt(n)
    assert np.all(np.abs(centres[0] - a.mean(axis=0)) < bound)
    assert np.all(np.abs(centres[1] - b.mean(axis=0)) < bound)


def test_kmeans_single_cluster_is_mean():
    x = np.random.default_rng(2).standard_normal((50, 3))
    np.testing.assert_allclose(kmeans(x, 1)[0], x.mean(axis=0), rtol=0, atol=1e-15)


def test_kmeans_too_many_clusters():
    with pytest.raises(ModelError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ModelError):
        kmeans(np.zeros((5, 2)), 2)  # only one distinct point


# --- GMM ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_em_log_likelihood_never_decreases(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(100, 400))
    x = np.vstack([rng.normal(rng.uniform(-3, 3, 3), rng.uniform(0.3, 2), (n, 3)) for _ in range(3)])
    _, history = fit_diag_gmm(x, int(rng.integers(1, 6)), seed=seed)
    assert np.all(np.diff(history) >= -1e-9 * len(x))


def test_single_gaussian_is_closed_form():
    x = np.random.default_rng(4).normal([1.0, -2.0, 0.5], [0.5, 2.0, 1.0], (300, 3))
    model, _ = fit_diag_gmm(x, 1)
    np.testing.assert_allclose(model.means[0], x.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(model.variances[0], x.var(axis=0), rtol=0, atol=1e-12)
    assert model.weights[0] == 1.0


def test_recovers_two_component_mixture():
    rng = np.random.default_rng(5)
    n = 10000
    truth = np.array([[0.0, 0.0], [5.0, 0.0]])
    comp = rng.integers(0, 2, n)
    x = truth[comp] + rng.standard_normal((n, 2))
    model, _ = fit_diag_gmm(x, 2, seed=0)
    means = model.means[np.argsort(model.means[:, 0])]
    assert np.abs(means - truth).max() < 0.1
    assert model.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_duplicated_rows_give_the_same_model():
    m = blobs(300, d=3, seed=6)
    doubled = m.take(np.repeat(np.arange(len(m)), 2))
    a, b = train_gmm(m, 3, seed=1), train_gmm(doubled, 3, seed=1)
    for key in ("weights_1", "means_1", "variances_1", "means_0"):
        np.testing.assert_allclose(a.params[key], b.params[key], rtol=1e-9, atol=1e-9)


def test_gmm_needs_enough_frames_per_class():
    m = FeatureMatrix(np.random.default_rng(0).standard_normal((20, 2)), [1] * 3 + [0] * 17, ["a", "b"])
    with pytest.raises(ModelError, match="class 1"):
        train_gmm(m, 4)


def _mirror_model():
    m = blobs(400, d=2, seed=7)
    model = train_gmm(m, 1)
    p = model.params
    # make class 0 the mirror image of class 1 about the origin
    p["means_0"] = -p["means_1"]
    p["variances_0"] = p["variances_1"].copy()
    p["log_prior_0"] = p["log_prior_1"] = np.log(0.5)
    return model


def test_symmetric_model_scores_zero_at_centre():
    model = _mirror_model()
    centre = model.scaler.mean  # standardises to the origin
    assert gmm_mod.score_gmm(model, centre)[0] == pytest.approx(0.0, abs=1e-12)


def test_score_positive_at_cough_mean():
    m = blobs(400, d=2, seed=8)
    model = train_gmm(m, 2)
    cough_mean = m.values[m.labels == 1].mean(axis=0)
    assert model.score(cough_mean)[0] > 0


def test_gmm_score_finite_for_extreme_inputs():
    model = train_gmm(blobs(200, d=2), 2)
    scores = model.score(np.array([[1e6, -1e6], [0.0, 1e8], [-1e3, 1e3]]))
    assert np.isfinite(scores).all()


def test_gmm_weights_and_floor():
    m = blobs(300, d=4, seed=9)
    m.values[:, 3] = 1.0  # constant column
    model = train_gmm(m, 4)
    for cls in (0, 1):
        assert model.params[f"weights_{cls}"].sum() == pytest.approx(1.0, abs=1e-9)
        assert (model.params[f"variances_{cls}"] >= gmm_mod.VAR_FLOOR).all()


# --- MLP ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_mlp_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d, h, n = int(rng.integers(1, 5)), int(rng.integers(1, 6)), int(rng.integers(3, 20))
    x = rng.standard_normal((n, d))
    y = rng.integers(0, 2, n).astype(float)
    params = init_params(d, h, seed)
    for k in params:
        params[k] = params[k] * 3  # push away from the linear regime
    _, grad = loss_and_grad(params, x, y)
    eps = 1e-6
    for key in mlp_mod.PARAM_NAMES:
        for idx in np.ndindex(params[key].shape):
            plus = {k: v.copy() for k, v in params.items()}
            minus = {k: v.copy() for k, v in params.items()}
            plus[key][idx] += eps
            minus[key][idx] -= eps
            numeric = (loss_and_grad(plus, x, y)[0] - loss_and_grad(minus, x, y)[0]) / (2 * eps)
            analytic = grad[key][idx]
            scale = max(abs(numeric), abs(analytic), 1e-4)
            assert abs(numeric - analytic) / scale < 1e-5, (key, idx)


def test_mlp_solves_xor_for_some_seed():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 5)
    y = np.array([0, 1, 1, 0] * 5)
    m = FeatureMatrix(x, y, ["a", "b"])
    solved = []
    for seed in range(10):
        model = train_mlp(m, 2, seed=seed)
        solved.append(np.array_equal(model.score_matrix(m) > 0.5, y == 1))
    assert any(solved)


def test_mlp_separable_blobs_single_neuron():
    m = blobs(300, d=3, sep=5.0, seed=10)
    model = train_mlp(m, 1, seed=0)
    assert auc(model.score_matrix(m), m.labels) > 0.99


def test_mlp_zero_weights_give_half():
    model = train_mlp(blobs(40), 3, max_epochs=1)
    for k in model.params:
        model.params[k] = np.zeros_like(model.params[k])
    out = model.score(np.random.default_rng(0).standard_normal((10, 2)) * 100)
    np.testing.assert_array_equal(out, 0.5)


def test_mlp_output_bounded():
    model = train_mlp(blobs(100), 4, seed=2)
    out = model.score(np.random.default_rng(1).standard_normal((500, 2)) * 5)
    assert ((out > 0) & (out < 1)).all()


def test_mlp_standardisation_applied_once():
    m = blobs(100, seed=11)
    m.values[:] = m.values * 50 + 300
    model = train_mlp(m, 3)
    direct = mlp_mod.score_standardized(model, model.scaler.transform(m.values))
    np.testing.assert_array_equal(model.score_matrix(m), direct)
    np.testing.assert_array_equal(from_json(to_json(model)).score_matrix(m), direct)


def test_mlp_stops_on_tiny_improvement():
    x = np.zeros((10, 1))
    y = np.zeros(10)
    y[:5] = 1
    _, losses = fit_mlp(x, y, 1, min_improvement=1.0)
    assert len(losses) == 2


def test_mlp_rejects_zero_hidden():
    with pytest.raises(ModelError):
        train_mlp(blobs(20), 0)


# --- SVM ------------------------------------------------------------------

def test_two_point_svm_midpoint_is_zero():
    m = FeatureMatrix(np.array([[0.0, 0.0], [2.0, 4.0]]), [0, 1], ["a", "b"])
    model = train_svm(m)
    assert model.score(np.array([1.0, 2.0]))[0] == pytest.approx(0.0, abs=1e-9)
    s = model.score(m.values)
    assert s[0] < 0 < s[1]


@pytest.mark.parametrize("seed", range(20))
def test_svm_kkt_on_separable_problems(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    n = int(rng.integers(20, 120))
    m = blobs(2 * (n // 2), d=d, sep=8.0, seed=seed)
    y = np.where(m.labels == 1, 1.0, -1.0)
    c = 10.0
    x = (m.values - m.values.mean(axis=0)) / m.values.std(axis=0)
    gamma = 1.0 / d
    alpha, bias, _ = smo(x, y, c, gamma)
    assert abs(alpha @ y) < 1e-6
    assert (alpha >= 0).all() and (alpha <= c).all()
    decision = svm_mod.rbf_kernel(x, x, gamma) @ (alpha * y) + bias
    assert np.array_equal(np.sign(decision), y)
    # free support vectors sit on the margin
    free = (alpha > 1e-8) & (alpha < c - 1e-8)
    np.testing.assert_allclose(np.abs(decision[free]), 1.0, atol=1e-2)


def test_svm_training_accuracy_and_score_bound():
    m = blobs(200, d=3, sep=6.0, seed=12)
    model = train_svm(m, c=100.0)
    s = model.score_matrix(m)
    assert np.array_equal(s > 0, m.labels == 1)
    p = model.params
    far = model.score(np.full((1, 3), 1e3))[0]
    assert abs(far) <= np.abs(p["dual_coef"]).sum() + abs(p["bias"])


def test_svm_single_class_rejected():
    m = FeatureMatrix(np.zeros((5, 2)), [1] * 5, ["a", "b"])
    with pytest.raises(ModelError, match="single class"):
        train_svm(m)


def test_svm_cached_kernel_matches_dense(monkeypatch):
    m = blobs(120, d=3, sep=2.0, seed=13)
    dense = train_svm(m)
    monkeypatch.setattr(svm_mod, "FULL_KERNEL_LIMIT", 10)
    monkeypatch.setattr(svm_mod, "CACHE_ROWS", 7)
    cached = train_svm(m)
    # rounding differs between the two kernel paths, so SMO stops at a
    # different point inside the same KKT tolerance
    np.testing.assert_allclose(cached.score_matrix(m), dense.score_matrix(m), atol=1e-2)


# --- shared contract ------------------------------------------------------

@pytest.mark.parametrize("kind, hyper", [("gmm", {"gaussians": 3}), ("mlp", {"neurons": 4}),
                                         ("svm", {"c": 5.0})])
def test_round_trip_and_determinism(tmp_path, kind, hyper):
    m = blobs(160, d=3, sep=2.5, seed=14)
    model = train(kind, m, seed=3, **hyper)
    path = tmp_path / f"{kind}.json"
    save_model(model, path)
    back = load_model(path)
    assert back.kind == kind and back.feature_names == m.names
    np.testing.assert_allclose(back.score_matrix(m), model.score_matrix(m), rtol=0, atol=1e-12)
    again = train(kind, m, seed=3, **hyper)
    assert to_json(again) == to_json(model)


@pytest.mark.parametrize("kind", ["gmm", "mlp", "svm"])
def test_scoring_rejects_mismatched_inputs(kind):
    m = blobs(60, d=2)
    model = train(kind, m, gaussians=2, neurons=2)
    with pytest.raises(ModelError):
        model.score(m.values, ["f1", "f0"])
    with pytest.raises(ModelError):
        model.score(np.zeros((3, 5)))


def test_unknown_classifier():
    with pytest.raises(ModelError, match="unknown classifier"):
        train("tree", blobs(10))


def test_malformed_model_file():
    with pytest.raises(ModelError):
        from_json('{"type": "gmm"}')
    with pytest.raises(ModelError):
        from_json("not json")
