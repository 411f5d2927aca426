"""K-means clustering, the Calinski-Harabasz index and k selection.

The functional layer (:func:`kmeans_fit`, :func:`ch_index`,
:func:`select_k`) works on :class:`~attrition.domain.GradeMatrix` or plain
arrays; :class:`KMeans` wraps it as a scikit-learn estimator.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, check_positive_int, derive_rng, derive_seed
from .exceptions import ConfigError, DataError, DegenerateDataError
from .splits import kfold_split

__all__ = [
    "KMeansConfig",
    "KMeansModel",
    "KSelectionResult",
    "KMeans",
    "kmeans_plusplus",
    "lloyd",
    "kmeans_fit",
    "ch_index",
    "select_k",
    "choose_k",
    "nearest_centroid",
]

_U64 = 2**64


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    restarts: int = 10
    max_iters: int = 300
    rel_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.k, "k")
        check_positive_int(self.restarts, "restarts")
        check_positive_int(self.max_iters, "max_iters")
        if not self.rel_tol >= 0:
            raise ConfigError(f"rel_tol must be non-negative, got {self.rel_tol}")
        if not 0 <= int(self.seed) < _U64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class KMeansModel:
    """A fitted clustering.

    ``inertia_history`` holds the per-iteration inertia of every restart
    (diagnostic only; not serialized and not part of equality).
    """

    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    config: KMeansConfig
    n_iter: int = 0
    best_restart: int = 0
    inertia_history: tuple = field(default=(), repr=False)

    def __eq__(self, other):
        if not isinstance(other, KMeansModel):
            return NotImplemented
        return (
            self.k == other.k
            and self.config == other.config
            and self.inertia == other.inertia
            and np.array_equal(self.centroids, other.centroids)
            and np.array_equal(self.assignments, other.assignments)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.assignments)

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.centroids.shape[1]:
            raise DataError(
                f"expected {self.centroids.shape[1]} features, got {X.shape[1]}"
            )
        return nearest_centroid(X, self.centroids)[0]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "assignments": self.assignments.tolist(),
            "inertia": float(self.inertia),
            "n_iter": self.n_iter,
            "best_restart": self.best_restart,
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KMeansModel":
        return cls(
            k=int(data["k"]),
            centroids=np.array(data["centroids"], dtype=float),
            assignments=np.array(data["assignments"], dtype=np.int64),
            inertia=float(data["inertia"]),
            config=KMeansConfig(**data["config"]),
            n_iter=int(data.get("n_iter", 0)),
            best_restart=int(data.get("best_restart", 0)),
        )


def _sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |x|^2 - 2x.c + |c|^2 expansion so
    # that exactly equidistant points compare equal
    return cdist(X, C, "sqeuclidean")


def nearest_centroid(X: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest centroid per row (lowest index on ties) and the
    squared distance to it."""
    d2 = _sq_distances(X, C)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(len(X)), labels]


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center is drawn with probability
    proportional to its squared distance from the nearest chosen center."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_distances(X, centers[:1])[:, 0]
    for c in range(1, k):
        cumulative = np.cumsum(closest)
        total = cumulative[-1]
        if total <= 0:
            raise DegenerateDataError("degenerate data: fewer distinct points than k")
        idx = min(int(np.searchsorted(cumulative, rng.random() * total, side="right")), n - 1)
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_distances(X, centers[c : c + 1])[:, 0])
    return centers


def _update_centroids(X, labels, d2, k):
    C = np.empty((k, X.shape[1]))
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j]:
            C[j] = X[labels == j].mean(axis=0)
    empty = np.flatnonzero(counts == 0)
    if len(empty):
        # re-seed each empty cluster with the point farthest from its centroid
        order = np.argsort(-d2, kind="stable")
        pos = 0
        for j in empty:
            while pos < len(order):
                i = order[pos]
                pos += 1
                if d2[i] > 0 and counts[labels[i]] > 1:
                    break
            else:
                raise DegenerateDataError("degenerate data: cannot refill empty cluster")
            C[j] = X[i]
            counts[labels[i]] -= 1
            counts[j] = 1
    return C


def lloyd(X: np.ndarray, centroids: np.ndarray, max_iters: int = 300, rel_tol: float = 1e-9):
    """Run Lloyd iterations from ``centroids``.

    Stops once the relative inertia decrease falls to ``rel_tol`` or after
    ``max_iters`` centroid updates. Returns ``(centroids, labels, inertia,
    history, n_iter)`` where ``history`` starts with the inertia of the
    initial assignment.
    """
    k = centroids.shape[0]
    C = np.array(centroids, dtype=float)
    labels, d2 = nearest_centroid(X, C)
    inertia = float(d2.sum())
    history = [inertia]
    n_iter = 0
    for _ in range(max_iters):
        C = _update_centroids(X, labels, d2, k)
        labels, d2 = nearest_centroid(X, C)
        new = float(d2.sum())
        history.append(new)
        n_iter += 1
        converged = inertia - new <= rel_tol * inertia
        inertia = new
        if converged and np.bincount(labels, minlength=k).min() > 0:
            break
    guard = 0
    while np.bincount(labels, minlength=k).min() == 0:
        guard += 1
        if guard > len(X):
            raise DegenerateDataError("degenerate data: empty cluster persists")
        C = _update_centroids(X, labels, d2, k)
        labels, d2 = nearest_centroid(X, C)
        inertia = float(d2.sum())
        history.append(inertia)
    return C, labels, inertia, history, n_iter


def kmeans_fit(m, cfg: KMeansConfig) -> KMeansModel:
    """Best-inertia K-means over ``cfg.restarts`` seeded k-means++ starts.

    Each restart draws from its own stream derived from ``(cfg.seed,
    restart)``; ties in inertia keep the earliest restart.
    """
    X = as_matrix(m)
    n = X.shape[0]
    k = cfg.k
    if n < k:
        raise DataError(f"need at least k={k} samples, got {n}")
    if k >= 2:
        distinct = len(np.unique(X, axis=0))
        if distinct == 1:
            raise DegenerateDataError("degenerate data: all points identical")
        if distinct < k:
            raise DegenerateDataError(
                f"degenerate data: {distinct} distinct points for k={k}"
            )
    best = None
    histories = []
    for r in range(cfg.restarts):
        init = kmeans_plusplus(X, k, derive_rng(cfg.seed, r))
        C, labels, inertia, history, n_iter = lloyd(X, init, cfg.max_iters, cfg.rel_tol)
        histories.append(tuple(history))
        if best is None or inertia < best[2]:
            best = (C, labels, inertia, n_iter, r)
    C, labels, inertia, n_iter, r = best
    C.flags.writeable = False
    labels = labels.astype(np.int64)
    labels.flags.writeable = False
    return KMeansModel(
        k=k,
        centroids=C,
        assignments=labels,
        inertia=inertia,
        config=cfg,
        n_iter=n_iter,
        best_restart=r,
        inertia_history=tuple(histories),
    )


def ch_index(m, assignments, k: int) -> float:
    """Calinski-Harabasz score: between-cluster over within-cluster
    dispersion, each divided by its degrees of freedom.

    Returns ``inf`` when the within-cluster dispersion is zero.
    """
    X = as_matrix(m)
    labels = np.asarray(assignments)
    n = X.shape[0]
    if k < 2:
        raise ConfigError(f"CH index needs k >= 2, got {k}")
    if labels.shape != (n,):
        raise DataError(f"expected {n} assignments, got shape {labels.shape}")
    if n <= k:
        raise DataError(f"CH index needs n > k (n={n}, k={k})")
    if labels.min() < 0 or labels.max() >= k:
        raise DataError("assignments outside [0, k)")
    counts = np.bincount(labels, minlength=k)
    if counts.min() == 0:
        raise DataError(f"empty cluster {int(np.argmin(counts))}")
    overall = X.mean(axis=0)
    ssb = 0.0
    ssw = 0.0
    for j in range(k):
        members = X[labels == j]
        c = members.mean(axis=0)
        ssb += counts[j] * float(((c - overall) ** 2).sum())
        ssw += float(((members - c) ** 2).sum())
    if ssw == 0:
        return float("inf")
    return (ssb / (k - 1)) / (ssw / (n - k))


@dataclass(frozen=True)
class KSelectionResult:
    per_k: dict[int, float]
    chosen_k: int
    per_fold: dict[int, tuple[float, ...]] = field(default_factory=dict)
    score_on: str = "train"

    def to_dict(self) -> dict:
        return {
            "chosen_k": self.chosen_k,
            "score_on": self.score_on,
            "per_k": {str(k): v for k, v in self.per_k.items()},
            "per_fold": {str(k): list(v) for k, v in self.per_fold.items()},
        }


def choose_k(per_k: dict[int, float]) -> int:
    """argmax of the mean score; the smallest k wins ties."""
    best = max(per_k.values())
    return min(k for k, v in per_k.items() if v == best)


def select_k(
    m,
    k_range: Sequence[int] | range = (2, 6),
    folds: int = 5,
    seed: int = 0,
    *,
    score_on: str = "train",
    restarts: int = 10,
    max_iters: int = 300,
    rel_tol: float = 1e-9,
) -> KSelectionResult:
    """Pick the cluster count maximizing the fold-averaged CH index.

    ``k_range`` is an inclusive ``(k_min, k_max)`` pair or a ``range``. For
    each k and each fold, K-means is fitted on the training portion. With
    ``score_on="train"`` the CH index of that fit is recorded; with
    ``"test"`` the held-out rows are assigned to their nearest centroid and
    scored instead.
    """
    if isinstance(k_range, range):
        ks = list(k_range)
    else:
        k_min, k_max = k_range
        ks = list(range(int(k_min), int(k_max) + 1))
    if not ks or ks[0] < 2:
        raise ConfigError("k range must be non-empty with minimum >= 2")
    if isinstance(folds, bool) or not isinstance(folds, (int, np.integer)) or folds < 2:
        raise ConfigError(f"folds must be an integer >= 2, got {folds!r}")
    if score_on not in ("train", "test"):
        raise ConfigError(f"score_on must be 'train' or 'test', got {score_on!r}")
    X = as_matrix(m)
    n = X.shape[0]
    if n < folds * max(ks):
        raise DataError(
            f"insufficient samples: n={n} < folds*max_k={folds * max(ks)}"
        )
    splits = kfold_split(n, folds, None, seed)
    per_k: dict[int, float] = {}
    per_fold: dict[int, tuple[float, ...]] = {}
    for k in ks:
        scores = []
        for f, (train, test) in enumerate(splits):
            cfg = KMeansConfig(k, restarts, max_iters, rel_tol, derive_seed(seed, f, k))
            model = kmeans_fit(X[train], cfg)
            if score_on == "train":
                scores.append(ch_index(X[train], model.assignments, k))
            else:
                held = model.predict(X[test])
                if np.bincount(held, minlength=k).min() == 0:
                    raise DegenerateDataError(
                        f"fold {f}: held-out rows leave a cluster empty at k={k}"
                    )
                scores.append(ch_index(X[test], held, k))
        per_fold[k] = tuple(scores)
        per_k[k] = float(np.mean(scores))
    return KSelectionResult(per_k, choose_k(per_k), per_fold, score_on)


class KMeans(ClusterMixin, TransformerMixin, BaseEstimator):
    """K-means estimator with seeded k-means++ restarts.

    Parameters
    ----------
    n_clusters : int, default=2
    restarts : int, default=10
        Number of independent k-means++ initializations; the lowest-inertia
        run is kept.
    max_iters : int, default=300
    rel_tol : float, default=1e-9
        Stop when the relative inertia decrease drops to this value.
    random_state : int, default=0
        Unsigned 64-bit seed.

    Attributes
    ----------
    model_ : KMeansModel
    cluster_centers_ : ndarray of shape (n_clusters, n_features)
    labels_ : ndarray of shape (n_samples,)
    inertia_ : float
    """

    def __init__(self, n_clusters=2, *, restarts=10, max_iters=300, rel_tol=1e-9, random_state=0):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.max_iters = max_iters
        self.rel_tol = rel_tol
        self.random_state = random_state

    def _config(self) -> KMeansConfig:
        return KMeansConfig(
            self.n_clusters, self.restarts, self.max_iters, self.rel_tol, self.random_state
        )

    def fit(self, X, y=None):
        X = as_matrix(X)
        self.model_ = kmeans_fit(X, self._config())
        self.cluster_centers_ = self.model_.centroids
        self.labels_ = self.model_.assignments
        self.inertia_ = self.model_.inertia
        self.n_iter_ = self.model_.n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(X)

    def transform(self, X):
        """Euclidean distance from each row to every centroid."""
        check_is_fitted(self, "model_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.sqrt(_sq_distances(X, self.cluster_centers_))

    def score(self, X, y=None):
        """Negative inertia of ``X`` under the fitted centroids."""
        check_is_fitted(self, "model_")
        return -float(nearest_centroid(as_matrix(X), self.cluster_centers_)[1].sum())
