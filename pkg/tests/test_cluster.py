import itertools
import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.metrics import adjusted_rand_score

from attrition.cluster import (
    KMeans,
    KMeansConfig,
    KMeansModel,
    ch_index,
    choose_k,
    kmeans_fit,
    lloyd,
    select_k,
)
from attrition.exceptions import ConfigError, DataError, DegenerateDataError


def brute_force_ch(X, labels, k):
    """SSB/SSW computed point by point with plain Python loops."""
    n, d = len(X), len(X[0])
    overall = [sum(X[i][c] for i in range(n)) / n for c in range(d)]
    centers, sizes = [], []
    for j in range(k):
        members = [X[i] for i in range(n) if labels[i] == j]
        sizes.append(len(members))
        centers.append([sum(p[c] for p in members) / len(members) for c in range(d)])
    ssb = sum(sizes[j] * sum((centers[j][c] - overall[c]) ** 2 for c in range(d)) for j in range(k))
    ssw = sum(sum((X[i][c] - centers[labels[i]][c]) ** 2 for c in range(d)) for i in range(n))
    if ssw == 0:
        return math.inf
    return (ssb / (k - 1)) / (ssw / (n - k))


def exhaustive_two_partition_inertia(X):
    n = len(X)
    best = math.inf
    # fix point 0 in cluster 0 to skip mirrored labelings
    for bits in itertools.product((0, 1), repeat=n - 1):
        labels = np.array((0,) + bits)
        if labels.min() == labels.max():
            continue
        cost = sum(((X[labels == j] - X[labels == j].mean(axis=0)) ** 2).sum() for j in (0, 1))
        best = min(best, cost)
    return best


def test_k1_centroid_is_column_mean(rng):
    X = rng.normal(size=(30, 4))
    model = kmeans_fit(X, KMeansConfig(1, seed=3))
    np.testing.assert_allclose(model.centroids[0], X.mean(axis=0), rtol=0, atol=1e-14)
    assert model.inertia == pytest.approx(((X - X.mean(axis=0)) ** 2).sum(), rel=1e-12)


def test_perfect_separation():
    X = np.array([[0.0], [0.0], [10.0], [10.0]])
    model = kmeans_fit(X, KMeansConfig(2, seed=1))
    assert sorted(model.centroids[:, 0].tolist()) == [0.0, 10.0]
    assert model.inertia == 0.0
    assert model.assignments[0] == model.assignments[1] != model.assignments[2]


def test_planted_gaussian_mixture():
    rng = np.random.default_rng(42)
    planted = np.repeat([0, 1], 100)
    X = np.where(planted[:, None] == 0, -3.0, 3.0) + rng.standard_normal((200, 2))
    model = kmeans_fit(X, KMeansConfig(2, seed=5))
    assert adjusted_rand_score(planted, model.assignments) >= 0.9


def test_fit_errors():
    with pytest.raises(DataError):
        kmeans_fit(np.zeros((2, 1)), KMeansConfig(3))
    with pytest.raises(DegenerateDataError, match="degenerate data"):
        kmeans_fit(np.ones((5, 2)), KMeansConfig(2))
    with pytest.raises(ConfigError):
        KMeansConfig(0)
    with pytest.raises(ConfigError):
        KMeansConfig(2, seed=-1)


def test_model_invariants(rng):
    X = rng.normal(size=(60, 3))
    model = kmeans_fit(X, KMeansConfig(4, seed=9))
    d2 = ((X[:, None, :] - model.centroids[None]) ** 2).sum(axis=2)
    np.testing.assert_array_equal(model.assignments, d2.argmin(axis=1))
    assert model.inertia == pytest.approx(d2.min(axis=1).sum(), rel=1e-12)
    assert np.bincount(model.assignments, minlength=4).min() > 0


def test_deterministic(rng):
    X = rng.normal(size=(80, 3))
    a = kmeans_fit(X, KMeansConfig(3, seed=11))
    b = kmeans_fit(X, KMeansConfig(3, seed=11))
    assert a == b
    assert a.inertia_history == b.inertia_history
    assert a.centroids.tobytes() == b.centroids.tobytes()


@pytest.mark.parametrize("trial", range(20))
def test_lloyd_inertia_non_increasing(trial):
    rng = np.random.default_rng(trial)
    X = rng.normal(size=(rng.integers(10, 60), rng.integers(1, 5)))
    model = kmeans_fit(X, KMeansConfig(int(rng.integers(2, 6)), restarts=3, seed=trial))
    for history in model.inertia_history:
        assert all(b <= a for a, b in zip(history, history[1:])), history


def test_empty_cluster_is_refilled():
    # the third start sits far away and attracts no points
    X = np.array([[0.0], [0.1], [5.0], [5.1], [9.0]])
    C, labels, inertia, history, _ = lloyd(X, np.array([[0.0], [5.0], [100.0]]))
    assert np.bincount(labels, minlength=3).min() > 0
    assert all(b <= a for a, b in zip(history, history[1:]))


def test_small_instances_reach_exhaustive_optimum():
    hits = 0
    for trial in range(30):
        rng = np.random.default_rng(1000 + trial)
        X = rng.normal(size=(int(rng.integers(3, 9)), int(rng.integers(1, 3))))
        model = kmeans_fit(X, KMeansConfig(2, restarts=50, seed=trial))
        hits += abs(model.inertia - exhaustive_two_partition_inertia(X)) <= 1e-9
    assert hits >= 28


def test_ch_hand_computed():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    assert ch_index(X, [0, 0, 1, 1], 2) == 200.0


def test_ch_zero_within_dispersion_is_inf():
    X = np.array([[0.0], [0.0], [10.0], [10.0]])
    assert ch_index(X, [0, 0, 1, 1], 2) == math.inf


def test_ch_errors():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    with pytest.raises(ConfigError):
        ch_index(X, [0, 0, 0, 0], 1)
    with pytest.raises(DataError, match="empty cluster"):
        ch_index(X, [0, 0, 2, 2], 3)
    with pytest.raises(DataError):
        ch_index(X[:2], [0, 1], 2)


@pytest.mark.parametrize("trial", range(25))
def test_ch_matches_brute_force(trial):
    rng = np.random.default_rng(trial)
    k = int(rng.integers(2, 4))
    n = int(rng.integers(k + 1, 51))
    X = rng.normal(size=(n, int(rng.integers(1, 6))))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    expected = brute_force_ch(X.tolist(), labels.tolist(), k)
    assert abs(ch_index(X, labels, k) - expected) <= 1e-9


def test_choose_k_ties_break_small():
    assert choose_k({2: 5.0, 3: 7.0, 4: 7.0}) == 3
    assert choose_k({2: 1.0, 3: 1.0}) == 2
    assert choose_k({4: math.inf, 2: math.inf, 3: 1.0}) == 2


def test_select_k_planted_two_groups(default_matrix):
    result = select_k(default_matrix, (2, 6), 5, seed=7)
    assert result.chosen_k == 2
    assert list(result.per_k) == [2, 3, 4, 5, 6]


def _oracle_per_k(X, ks, folds, seed):
    from attrition._validation import derive_seed
    from attrition.splits import kfold_split

    per_k = {}
    for k in ks:
        scores = []
        for f, (train, _) in enumerate(kfold_split(len(X), folds, None, seed)):
            model = kmeans_fit(X[train], KMeansConfig(k, seed=derive_seed(seed, f, k)))
            scores.append(brute_force_ch(X[train].tolist(), model.assignments.tolist(), k))
        per_k[k] = sum(scores) / len(scores)
    return per_k


def test_select_k_single_blob_is_flat():
    X = np.random.default_rng(3).normal(size=(200, 2))
    result = select_k(X, (2, 4), 5, seed=1)
    oracle = _oracle_per_k(X, (2, 3, 4), 5, 1)
    for k in (2, 3, 4):
        assert result.per_k[k] == pytest.approx(oracle[k], abs=1e-9)
    assert max(oracle.values()) <= 2 * min(oracle.values())


def test_select_k_two_blobs_matches_oracle():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal(-2, 1, (30, 2)), rng.normal(2, 1, (30, 2))])
    result = select_k(X, (2, 3), 3, seed=4)
    oracle = _oracle_per_k(X, (2, 3), 3, 4)
    assert result.per_k == pytest.approx(oracle, abs=1e-9)
    assert result.chosen_k == max(oracle, key=oracle.get) == 2


def test_select_k_held_out_scoring():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal(-4, 1, (40, 2)), rng.normal(4, 1, (40, 2))])
    result = select_k(X, (2, 3), 4, seed=2, score_on="test")
    assert result.chosen_k == 2
    assert result.score_on == "test"


def test_select_k_errors():
    X = np.random.default_rng(0).normal(size=(20, 2))
    with pytest.raises(ConfigError):
        select_k(X, (2, 3), folds=1)
    with pytest.raises(ConfigError):
        select_k(X, (1, 3), folds=2)
    with pytest.raises(DataError, match="insufficient"):
        select_k(X, (2, 6), folds=5)


def test_estimator_api(rng):
    X = np.vstack([rng.normal(-3, 1, (20, 2)), rng.normal(3, 1, (20, 2))])
    est = KMeans(2, random_state=4)
    assert est.get_params()["n_clusters"] == 2
    labels = est.fit_predict(X)
    np.testing.assert_array_equal(labels, est.labels_)
    np.testing.assert_array_equal(est.predict(X), labels)
    assert est.transform(X).shape == (40, 2)
    assert est.score(X) == pytest.approx(-est.inertia_)
    clone(est).set_params(n_clusters=3).fit(X)


def test_model_dict_round_trip(rng):
    X = rng.normal(size=(30, 2))
    model = kmeans_fit(X, KMeansConfig(3, seed=2))
    assert KMeansModel.from_dict(model.to_dict()) == model


@pytest.mark.parametrize("trial", range(10))
def test_ch_agrees_with_sklearn(trial):
    from sklearn.metrics import calinski_harabasz_score

    rng = np.random.default_rng(500 + trial)
    X = rng.normal(size=(40, 3))
    labels = np.concatenate([np.arange(3), rng.integers(0, 3, 37)])
    assert ch_index(X, labels, 3) == pytest.approx(calinski_harabasz_score(X, labels), rel=1e-12)


def test_inertia_not_worse_than_sklearn():
    from sklearn.cluster import KMeans as SkKMeans

    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(c, 0.5, size=(60, 4)) for c in (-2, 0, 2)])
    ours = kmeans_fit(X, KMeansConfig(3, restarts=10, seed=1)).inertia
    theirs = SkKMeans(3, n_init=10, random_state=1).fit(X).inertia_
    assert ours <= theirs * (1 + 1e-9)
