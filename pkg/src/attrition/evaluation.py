"""Confusion metrics, ROC analysis and the cross-validated comparison."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import as_labels, derive_seed
from .domain import CurriculumSpec, GradeMatrix, subset_first_k
from .exceptions import DataError, DegenerateDataError
from .predict import ClusterClassifier, LogisticModel
from .splits import kfold_split

__all__ = [
    "ConfusionCounts",
    "Metrics",
    "RocCurve",
    "EvalReport",
    "metrics_from_counts",
    "f1_from",
    "roc_from_scores",
    "evaluate_scores",
    "kfold_split",
    "compare_classifiers",
    "reports_to_json",
    "write_roc_csv",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true, dtype=bool)
        y_pred = as_labels(y_pred, len(y_true))
        return cls(
            tp=int(np.sum(y_true & y_pred)),
            fp=int(np.sum(~y_true & y_pred)),
            tn=int(np.sum(~y_true & ~y_pred)),
            fn=int(np.sum(y_true & ~y_pred)),
        )


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    # names of metrics whose ratio was 0/0 and therefore reported as 0
    undefined: tuple[str, ...] = ()


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def f1_from(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall (0 when both are 0)."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def metrics_from_counts(c: ConfusionCounts) -> Metrics:
    if c.total == 0:
        raise DataError("no evaluated samples")
    undefined: list[str] = []
    precision = _ratio(c.tp, c.tp + c.fp, "precision", undefined)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", undefined)
    if precision + recall == 0:
        undefined.append("f1")
        f1 = 0.0
    else:
        f1 = f1_from(precision, recall)
    return Metrics((c.tp + c.tn) / c.total, precision, recall, f1, tuple(undefined))


@dataclass(frozen=True)
class RocCurve:
    """ROC points from (0, 0) to (1, 1).

    ``thresholds[i]`` is the score cut that produces ``points[i + 1]``
    (predict positive when score >= threshold).
    """

    points: tuple[tuple[float, float], ...]
    auc: float
    thresholds: tuple[float, ...] = ()

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def roc_from_scores(scores, labels) -> RocCurve:
    """ROC curve with tied scores grouped into a single step.

    The trapezoidal area is accumulated in integer counts and divided once,
    so it matches the tie-adjusted concordance statistic to rounding.
    """
    scores = np.asarray(scores, dtype=float)
    labels = as_labels(labels, len(scores))
    if scores.ndim != 1:
        raise DataError("scores must be one-dimensional")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last index of every run of equal scores
    ends = np.append(np.flatnonzero(s[1:] != s[:-1]), len(s) - 1)
    tps = np.cumsum(y)[ends].astype(np.int64)
    fps = (ends + 1) - tps
    tp_prev = np.concatenate([[0], tps[:-1]])
    fp_prev = np.concatenate([[0], fps[:-1]])
    twice_area = int(np.sum((fps - fp_prev) * (tps + tp_prev)))
    auc = twice_area / (2 * n_pos * n_neg)
    points = ((0.0, 0.0),) + tuple(
        (int(f) / n_neg, int(t) / n_pos) for f, t in zip(fps, tps)
    )
    return RocCurve(points, auc, tuple(float(v) for v in s[ends]))


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc: RocCurve
    undefined: tuple[str, ...] = ()

    @property
    def auc(self) -> float:
        return self.roc.auc

    def to_dict(self) -> dict:
        return {
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "tn": self.counts.tn,
                "fn": self.counts.fn,
            },
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.roc.auc,
            "undefined": list(self.undefined),
        }


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    """Build a report from probability scores, predicting True at
    ``score >= threshold``."""
    scores = np.asarray(scores, dtype=float)
    labels = as_labels(labels, len(scores))
    counts = ConfusionCounts.from_predictions(labels, scores >= threshold)
    m = metrics_from_counts(counts)
    return EvalReport(
        counts, m.accuracy, m.precision, m.recall, m.f1, roc_from_scores(scores, labels), m.undefined
    )


CLASSIFIERS = ("logistic", "cluster")


def compare_classifiers(
    m: GradeMatrix,
    spec: CurriculumSpec,
    *,
    k: int = 2,
    first_n: int = 3,
    folds: int = 5,
    seed: int = 0,
    restarts: int = 10,
    l2_lambda: float = 1e-4,
    threshold: float = 0.5,
) -> dict[tuple[str, str], EvalReport]:
    """Cross-validated comparison of the cluster and logistic classifiers.

    Runs stratified ``folds``-fold CV on the full course set and on the
    first ``first_n`` pathway courses. Held-out probabilities are pooled
    over folds into one :class:`EvalReport` per ``(classifier,
    feature_set)`` key, with feature sets named ``"first_<n>"`` and
    ``"full"``.
    """
    labels = m.labels
    if labels.all() or not labels.any():
        raise DegenerateDataError("degenerate labels: both classes are required")
    feature_sets = {
        f"first_{first_n}": subset_first_k(m, spec, first_n),
        "full": subset_first_k(m, spec, m.d),
    }
    splits = kfold_split(m.n, folds, labels, seed)
    reports = {}
    for fs_index, (fs_name, fm) in enumerate(feature_sets.items()):
        X = fm.values
        pooled = {name: np.empty(m.n) for name in CLASSIFIERS}
        for f, (train, test) in enumerate(splits):
            models = {
                "logistic": LogisticModel(l2_lambda, threshold=threshold),
                "cluster": ClusterClassifier(
                    k,
                    restarts=restarts,
                    random_state=derive_seed(seed, f, fs_index),
                    threshold=threshold,
                ),
            }
            for name, model in models.items():
                model.fit(X[train], labels[train])
                pooled[name][test] = model.predict_proba(X[test])[:, 1]
        for name in CLASSIFIERS:
            reports[(name, fs_name)] = evaluate_scores(pooled[name], labels, threshold)
    return reports


def reports_to_json(reports: dict[tuple[str, str], EvalReport]) -> str:
    entries = [
        {"classifier": clf, "feature_set": fs, **rep.to_dict()}
        for (clf, fs), rep in reports.items()
    ]
    return json.dumps(entries, indent=2, sort_keys=True) + "\n"


def write_roc_csv(roc: RocCurve, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        for fpr, tpr in roc.points:
            w.writerow([repr(fpr), repr(tpr)])
    return path
