import math
import warnings

import numpy as np
import pytest
from sklearn.base import clone

from attrition.cluster import KMeansConfig, KMeansModel, kmeans_fit
from attrition.exceptions import DataError, DegenerateDataError
from attrition.predict import (
    ClusterClassifier,
    LogisticModel,
    cluster_classifier_predict,
    cluster_classifier_train,
    logistic_fit,
    logistic_gradient,
    logistic_objective,
    logistic_predict,
    model_from_json,
    model_to_json,
)


def _model(centroids, assignments):
    centroids = np.asarray(centroids, dtype=float)
    assignments = np.asarray(assignments)
    return KMeansModel(len(centroids), centroids, assignments, 0.0, KMeansConfig(len(centroids)))


def test_fraction_three_of_four():
    clf = cluster_classifier_train(_model([[0.0]], [0, 0, 0, 0]), [True, True, True, False])
    assert clf.cluster_pos_fraction_.tolist() == [0.75]
    assert clf.cluster_sizes_.tolist() == [4]


def test_fraction_all_graduates_and_two_clusters():
    clf = cluster_classifier_train(_model([[0.0]], [0, 0]), [True, True])
    assert clf.cluster_pos_fraction_.tolist() == [1.0]
    clf = cluster_classifier_train(_model([[0.0], [5.0]], [0, 0, 1, 1]), [True, False, False, False])
    assert clf.cluster_pos_fraction_.tolist() == [0.5, 0.0]
    assert clf.cluster_sizes_.sum() == 4


def test_train_errors():
    with pytest.raises(DataError):
        cluster_classifier_train(_model([[0.0]], [0, 0]), [True])
    with pytest.raises(DataError, match="no training members"):
        cluster_classifier_train(_model([[0.0], [1.0]], [0, 0]), [True, False])


def test_predict_threshold_rule():
    clf = cluster_classifier_train(_model([[0.0], [9.0]], [0, 0, 0, 0, 1]), [1, 1, 1, 0, 0])
    assert cluster_classifier_predict(clf, [0.2]) == (0.75, True)
    half = cluster_classifier_train(_model([[0.0]], [0, 0]), [True, False])
    assert cluster_classifier_predict(half, [3.0]) == (0.5, True)


def test_predict_equidistant_goes_to_lowest_index():
    labels = [False] * 4 + [True] + [True] * 9 + [False]
    clf = cluster_classifier_train(_model([[0.0, 0.0], [2.0, 2.0]], [0] * 5 + [1] * 10), labels)
    assert clf.cluster_pos_fraction_.tolist() == [0.2, 0.9]
    # (1, 1) lies exactly halfway between the two centroids
    assert cluster_classifier_predict(clf, [1.0, 1.0]) == (0.2, False)


def test_predict_dimension_mismatch():
    clf = cluster_classifier_train(_model([[0.0]], [0, 0]), [True, False])
    with pytest.raises(DataError):
        cluster_classifier_predict(clf, [1.0, 2.0])


def test_cluster_probabilities_take_at_most_k_values(rng):
    X = rng.normal(size=(100, 3))
    y = rng.random(100) < 0.5
    clf = ClusterClassifier(3, random_state=1).fit(X, y)
    p = clf.predict_proba(rng.normal(size=(50, 3)))
    assert len(np.unique(p[:, 1])) <= 3
    assert ((p >= 0) & (p <= 1)).all()
    np.testing.assert_allclose(p.sum(axis=1), 1.0)


def test_cluster_fractions_permutation_invariant(rng):
    X = np.vstack([rng.normal(-3, 1, (30, 2)), rng.normal(3, 1, (30, 2))])
    y = rng.random(60) < 0.5
    base = ClusterClassifier(2, random_state=0).fit(X, y)
    perm = rng.permutation(60)
    shuffled = ClusterClassifier(2, random_state=0).fit(X[perm], y[perm])
    probe = rng.normal(size=(20, 2)) * 3
    np.testing.assert_array_equal(base.predict_proba(probe), shuffled.predict_proba(probe))


def test_cluster_classifier_estimator_api(rng):
    X = np.vstack([rng.normal(-3, 1, (30, 2)), rng.normal(3, 1, (30, 2))])
    y = np.repeat([True, False], 30)
    clf = ClusterClassifier(2, random_state=2)
    assert clf.fit(X, y).score(X, y) == 1.0
    assert clone(clf).get_params() == clf.get_params()


def test_zero_weights_give_half():
    model = LogisticModel()
    model.coef_, model.intercept_, model.n_features_in_ = np.zeros(2), 0.0, 2
    assert logistic_predict(model, [3.0, -1.0]) == (0.5, True)
    model.intercept_ = 50.0
    p, pred = logistic_predict(model, [0.0, 0.0])
    assert p == pytest.approx(1.0, abs=1e-20) and pred


def test_sigmoid_of_log_two():
    model = LogisticModel()
    model.coef_, model.intercept_, model.n_features_in_ = np.array([1.0]), 0.0, 1
    p, _ = logistic_predict(model, [math.log(2.0)])
    assert p == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_separable_one_dimensional():
    X = np.array([[-1.0]] * 5 + [[1.0]] * 5)
    y = np.array([False] * 5 + [True] * 5)
    model = logistic_fit(X, y)
    assert model.coef_[0] > 0
    assert model.score(X, y) == 1.0


def _fd_gradient(w, b, X, y, lam, h=1e-6):
    theta = np.append(w, b)
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (logistic_objective(up[:-1], up[-1], X, y, lam)
                   - logistic_objective(down[:-1], down[-1], X, y, lam)) / (2 * h)
    return grad


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 4))
    y = (rng.random(40) < 0.4).astype(float)
    for _ in range(20):
        w, b = rng.normal(size=4), float(rng.normal())
        gw, gb = logistic_gradient(w, b, X, y, 0.1)
        analytic = np.append(gw, gb)
        numeric = _fd_gradient(w, b, X, y, 0.1)
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        assert rel <= 1e-5


@pytest.mark.parametrize("solver", ["newton", "gd"])
def test_optimum_gradient_norm(solver):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(80, 3))
    y = rng.random(80) < 1 / (1 + np.exp(-(X @ [1.0, -0.5, 0.2])))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        model = LogisticModel(l2_lambda=1e-2, solver=solver, max_iters=5000).fit(X, y)
    numeric = _fd_gradient(model.coef_, model.intercept_, X, y.astype(float), 1e-2)
    assert model.grad_norm_ <= 1e-6
    assert np.linalg.norm(numeric) <= 1e-6


def test_solvers_agree():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(60, 2))
    y = rng.random(60) < 0.5
    a = LogisticModel(l2_lambda=0.05).fit(X, y)
    b = LogisticModel(l2_lambda=0.05, solver="gd", max_iters=5000).fit(X, y)
    np.testing.assert_allclose(a.coef_, b.coef_, atol=1e-5)


def test_l2_monotone_shrinkage():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 5))
    y = rng.random(100) < 1 / (1 + np.exp(-(X @ [2.0, -1.0, 0.5, 0.0, 1.0])))
    norms = [np.linalg.norm(LogisticModel(l2_lambda=lam).fit(X, y).coef_)
             for lam in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0]]
    assert all(b <= a + 1e-9 for a, b in zip(norms, norms[1:]))


def test_degenerate_labels():
    with pytest.raises(DegenerateDataError, match="degenerate labels"):
        logistic_fit(np.zeros((4, 1)), [True] * 4)


def test_logistic_dimension_mismatch():
    model = logistic_fit(np.array([[0.0], [1.0]]), [False, True])
    with pytest.raises(DataError):
        logistic_predict(model, [1.0, 2.0])


def test_json_round_trip_bit_exact(rng):
    X = rng.normal(size=(50, 3))
    y = rng.random(50) < 0.5
    for clf in (ClusterClassifier(3, random_state=9).fit(X, y), LogisticModel().fit(X, y)):
        again = model_from_json(model_to_json(clf))
        np.testing.assert_array_equal(again.predict_proba(X), clf.predict_proba(X))
        assert model_to_json(again) == model_to_json(clf)
    logit = model_from_json(model_to_json(LogisticModel().fit(X, y)))
    assert logit.coef_.tobytes() == LogisticModel().fit(X, y).coef_.tobytes()
