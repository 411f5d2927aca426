"""Graduation classifiers: co-cluster fractions and a logistic baseline."""

from __future__ import annotations

import json
import warnings

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from ._validation import as_labels, as_matrix, as_vector
from .cluster import KMeansConfig, KMeansModel, kmeans_fit, nearest_centroid
from .domain import GradeMatrix
from .exceptions import ConfigError, DataError, DegenerateDataError

__all__ = [
    "ClusterClassifier",
    "LogisticModel",
    "cluster_classifier_train",
    "cluster_classifier_predict",
    "logistic_fit",
    "logistic_predict",
    "logistic_objective",
    "logistic_gradient",
    "model_to_json",
    "model_from_json",
]

_CLASSES = np.array([False, True])


def _check_threshold(threshold):
    if not 0 < threshold < 1:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")


def _split_xy(m, y):
    X = as_matrix(m)
    if y is None:
        if not isinstance(m, GradeMatrix):
            raise DataError("labels are required unless a GradeMatrix is given")
        y = m.labels
    return X, as_labels(y, X.shape[0])


class ClusterClassifier(ClassifierMixin, BaseEstimator):
    """Predict graduation from the graduate fraction of the nearest cluster.

    Fitting runs K-means on the training rows; each cluster's probability
    estimate is the share of its training members whose label is True.

    Attributes
    ----------
    model_ : KMeansModel
    cluster_pos_fraction_ : ndarray of shape (n_clusters,)
    cluster_sizes_ : ndarray of shape (n_clusters,)
    """

    def __init__(
        self,
        n_clusters=2,
        *,
        restarts=10,
        max_iters=300,
        rel_tol=1e-9,
        random_state=0,
        threshold=0.5,
    ):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.max_iters = max_iters
        self.rel_tol = rel_tol
        self.random_state = random_state
        self.threshold = threshold

    def fit(self, X, y=None):
        _check_threshold(self.threshold)
        X, y = _split_xy(X, y)
        cfg = KMeansConfig(
            self.n_clusters, self.restarts, self.max_iters, self.rel_tol, self.random_state
        )
        return self._fit_fractions(kmeans_fit(X, cfg), y)

    def _fit_fractions(self, model: KMeansModel, y):
        y = as_labels(y, model.n)
        sizes = np.bincount(model.assignments, minlength=model.k)
        if sizes.min() == 0:
            raise DataError(f"cluster {int(np.argmin(sizes))} has no training members")
        positives = np.bincount(model.assignments, weights=y.astype(float), minlength=model.k)
        self.model_ = model
        self.cluster_sizes_ = sizes
        self.cluster_pos_fraction_ = positives / sizes
        self.classes_ = _CLASSES
        self.n_features_in_ = model.centroids.shape[1]
        return self

    def predict_proba(self, X):
        """Columns are (P[not graduated], P[graduated])."""
        check_is_fitted(self, "model_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        p = self.cluster_pos_fraction_[nearest_centroid(X, self.model_.centroids)[0]]
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.predict_proba(X)[:, 1] >= self.threshold

    def to_dict(self) -> dict:
        check_is_fitted(self, "model_")
        return {
            "type": "cluster",
            "threshold": self.threshold,
            "cluster_pos_fraction": self.cluster_pos_fraction_.tolist(),
            "cluster_sizes": self.cluster_sizes_.tolist(),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterClassifier":
        model = KMeansModel.from_dict(data["model"])
        cfg = model.config
        clf = cls(
            cfg.k,
            restarts=cfg.restarts,
            max_iters=cfg.max_iters,
            rel_tol=cfg.rel_tol,
            random_state=cfg.seed,
            threshold=data["threshold"],
        )
        clf.model_ = model
        clf.cluster_sizes_ = np.array(data["cluster_sizes"], dtype=np.int64)
        clf.cluster_pos_fraction_ = np.array(data["cluster_pos_fraction"], dtype=float)
        clf.classes_ = _CLASSES
        clf.n_features_in_ = model.centroids.shape[1]
        return clf


def cluster_classifier_train(model: KMeansModel, labels, threshold: float = 0.5) -> ClusterClassifier:
    """Attach per-cluster graduate fractions to an already fitted clustering."""
    _check_threshold(threshold)
    if len(labels) != model.n:
        raise DataError(f"expected {model.n} labels, got {len(labels)}")
    cfg = model.config
    clf = ClusterClassifier(
        model.k,
        restarts=cfg.restarts,
        max_iters=cfg.max_iters,
        rel_tol=cfg.rel_tol,
        random_state=cfg.seed,
        threshold=threshold,
    )
    return clf._fit_fractions(model, labels)


def cluster_classifier_predict(c: ClusterClassifier, x) -> tuple[float, bool]:
    x = as_vector(x, c.n_features_in_)
    p = float(c.predict_proba(x[None, :])[0, 1])
    return p, p >= c.threshold


def logistic_objective(w, b, X, y, l2_lambda) -> float:
    """Mean negative log-likelihood plus ``l2_lambda/2 * |w|^2``.

    The intercept is not penalized.
    """
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_lambda * (w @ w))


def logistic_gradient(w, b, X, y, l2_lambda) -> tuple[np.ndarray, float]:
    r = expit(X @ w + b) - y
    return X.T @ r / len(y) + l2_lambda * w, float(r.mean())


class LogisticModel(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression.

    Minimizes :func:`logistic_objective` until the full gradient norm is at
    most ``tol`` or ``max_iters`` steps have been taken.

    Parameters
    ----------
    l2_lambda : float, default=1e-4
    max_iters : int, default=500
    tol : float, default=1e-6
        Gradient-norm stopping tolerance.
    threshold : float, default=0.5
    solver : {"newton", "gd"}, default="newton"
        Damped Newton steps or plain gradient descent; both use Armijo
        backtracking.
    """

    def __init__(self, l2_lambda=1e-4, *, max_iters=500, tol=1e-6, threshold=0.5, solver="newton"):
        self.l2_lambda = l2_lambda
        self.max_iters = max_iters
        self.tol = tol
        self.threshold = threshold
        self.solver = solver

    def fit(self, X, y=None):
        _check_threshold(self.threshold)
        if self.l2_lambda < 0:
            raise ConfigError("l2_lambda must be non-negative")
        if self.solver not in ("newton", "gd"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        X, y = _split_xy(X, y)
        if X.shape[0] < 2 or y.all() or not y.any():
            raise DegenerateDataError("degenerate labels: both classes are required")
        yf = y.astype(float)
        n, d = X.shape
        lam = float(self.l2_lambda)
        w = np.zeros(d)
        b = 0.0
        step = 1.0
        loss = logistic_objective(w, b, X, yf, lam)
        gw, gb = logistic_gradient(w, b, X, yf, lam)
        gnorm = float(np.sqrt(gw @ gw + gb * gb))
        it = 0
        while gnorm > self.tol and it < self.max_iters:
            g = np.append(gw, gb)
            if self.solver == "newton":
                p = expit(X @ w + b)
                s = p * (1 - p)
                Xt = np.column_stack([X, np.ones(n)])
                H = (Xt.T * s) @ Xt / n
                H[np.arange(d), np.arange(d)] += lam
                try:
                    direction = -np.linalg.solve(H, g)
                except np.linalg.LinAlgError:
                    direction = -np.linalg.lstsq(H, g, rcond=None)[0]
                if not direction @ g < 0:
                    direction = -g
                t = 1.0
            else:
                direction = -g
                t = step
            slope = float(direction @ g)
            while True:
                w_new = w + t * direction[:d]
                b_new = b + t * direction[d]
                new_loss = logistic_objective(w_new, b_new, X, yf, lam)
                if new_loss <= loss + 1e-4 * t * slope or t < 1e-16:
                    break
                t *= 0.5
            if self.solver == "gd":
                step = min(t * 2.0, 1e6)
            if new_loss > loss:
                break  # no descent possible at machine precision
            w, b, loss = w_new, b_new, new_loss
            gw, gb = logistic_gradient(w, b, X, yf, lam)
            gnorm = float(np.sqrt(gw @ gw + gb * gb))
            it += 1
        if not (np.isfinite(w).all() and np.isfinite(b)):
            raise DegenerateDataError("logistic fit diverged")
        if gnorm > self.tol:
            warnings.warn(
                f"logistic fit stopped after {it} iterations with gradient norm {gnorm:.3g}",
                ConvergenceWarning,
            )
        self.coef_ = w
        self.intercept_ = float(b)
        self.n_iter_ = it
        self.grad_norm_ = gnorm
        self.classes_ = _CLASSES
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "coef_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        p = expit(X @ self.coef_ + self.intercept_)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.predict_proba(X)[:, 1] >= self.threshold

    def to_dict(self) -> dict:
        check_is_fitted(self, "coef_")
        return {
            "type": "logistic",
            "threshold": self.threshold,
            "weights": self.coef_.tolist(),
            "bias": self.intercept_,
            "config": {
                "l2_lambda": self.l2_lambda,
                "max_iters": self.max_iters,
                "tol": self.tol,
                "solver": self.solver,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LogisticModel":
        clf = cls(threshold=data["threshold"], **data["config"])
        clf.coef_ = np.array(data["weights"], dtype=float)
        clf.intercept_ = float(data["bias"])
        clf.classes_ = _CLASSES
        clf.n_features_in_ = len(clf.coef_)
        return clf


def logistic_fit(m, labels=None, **cfg) -> LogisticModel:
    """Fit :class:`LogisticModel`; labels default to ``m.labels`` for a
    GradeMatrix. Keyword arguments are estimator parameters."""
    return LogisticModel(**cfg).fit(m, labels)


def logistic_predict(model: LogisticModel, x) -> tuple[float, bool]:
    x = as_vector(x, model.n_features_in_)
    p = float(expit(x @ model.coef_ + model.intercept_))
    return p, p >= model.threshold


def model_to_json(model) -> str:
    """Serialize a fitted classifier. Floats use Python's shortest
    round-trip repr, so :func:`model_from_json` restores them bit-exactly."""
    return json.dumps(model.to_dict(), indent=2)


def model_from_json(text: str):
    data = json.loads(text)
    kind = data.get("type")
    if kind == "cluster":
        return ClusterClassifier.from_dict(data)
    if kind == "logistic":
        return LogisticModel.from_dict(data)
    raise DataError(f"unknown model type {kind!r}")
