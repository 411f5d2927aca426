"""Bottleneck-course ranking and per-cluster enrollment profiles."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster import KMeansModel
from .domain import CurriculumSpec, GradeMatrix, StudentRecord
from .exceptions import ConfigError, DataError

__all__ = [
    "BottleneckRow",
    "BottleneckReport",
    "ClusterStats",
    "ClusterProfile",
    "bottleneck_rank",
    "cluster_profile",
    "early_warning_features",
]


@dataclass(frozen=True)
class BottleneckRow:
    course_id: str
    division: str
    pathway_position: int
    cluster_means: tuple[float, ...]
    separation: float


@dataclass(frozen=True)
class BottleneckReport:
    rows: tuple[BottleneckRow, ...]

    @property
    def course_ids(self) -> list[str]:
        return [r.course_id for r in self.rows]

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2) + "\n"

    def write_csv(self, path) -> Path:
        path = Path(path)
        k = len(self.rows[0].cluster_means) if self.rows else 0
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["rank", "course_id", "division", "pathway_position"]
                + [f"mean_cluster_{j}" for j in range(k)]
                + ["separation"]
            )
            for rank, r in enumerate(self.rows, start=1):
                w.writerow(
                    [rank, r.course_id, r.division, r.pathway_position]
                    + [repr(v) for v in r.cluster_means]
                    + [repr(r.separation)]
                )
        return path


def _cluster_means(values: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    return np.vstack([values[assignments == j].mean(axis=0) for j in range(k)])


def bottleneck_rank(m: GradeMatrix, model: KMeansModel, spec: CurriculumSpec) -> BottleneckReport:
    """Rank courses by how far apart their per-cluster mean grades are.

    Separation is the largest absolute difference between any two cluster
    means, i.e. ``|mean_0 - mean_1|`` for two clusters. Imputed F grades
    count toward the means. Ties keep pathway order.
    """
    if model.n != m.n:
        raise DataError(f"model was fitted on {model.n} rows, matrix has {m.n}")
    if model.centroids.shape[1] != m.d:
        raise DataError(f"model has {model.centroids.shape[1]} features, matrix has {m.d}")
    if np.bincount(model.assignments, minlength=model.k).min() == 0:
        raise DataError("model has an empty cluster")
    means = _cluster_means(m.values, model.assignments, model.k)
    separation = means.max(axis=0) - means.min(axis=0)
    rows = []
    for j, course_id in enumerate(m.columns):
        try:
            course = spec[course_id]
        except KeyError:
            raise DataError(f"course {course_id!r} not in curriculum") from None
        rows.append(
            BottleneckRow(
                course_id,
                course.division,
                course.pathway_position,
                tuple(float(v) for v in means[:, j]),
                float(separation[j]),
            )
        )
    rows.sort(key=lambda r: (-r.separation, r.pathway_position))
    return BottleneckReport(tuple(rows))


def early_warning_features(
    report: BottleneckReport, division_filter: str = "lower", top_n: int = 3
) -> list[str]:
    """The ``top_n`` most separated courses, optionally lower division only."""
    if division_filter not in ("lower", "any"):
        raise ConfigError(f"division filter must be 'lower' or 'any', got {division_filter!r}")
    if top_n < 1:
        raise ConfigError("top_n must be >= 1")
    rows = [r for r in report.rows if division_filter == "any" or r.division == division_filter]
    if top_n > len(rows):
        raise ConfigError(
            f"top_n={top_n} exceeds the {len(rows)} courses matching '{division_filter}'"
        )
    return [r.course_id for r in rows[:top_n]]


@dataclass(frozen=True)
class ClusterStats:
    cluster: int
    size: int
    graduation_rate: float
    mean_semesters: float
    mean_units: float
    mean_transfer_units: float


@dataclass(frozen=True)
class ClusterProfile:
    clusters: tuple[ClusterStats, ...]

    def lowest_graduation(self) -> ClusterStats:
        """The cluster with the lowest graduation rate (lowest index on ties)."""
        return min(self.clusters, key=lambda c: (c.graduation_rate, c.cluster))

    def to_json(self) -> str:
        return json.dumps([asdict(c) for c in self.clusters], indent=2) + "\n"

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["cluster", "size", "graduation_rate", "mean_semesters", "mean_units", "mean_transfer_units"]
            )
            for c in self.clusters:
                w.writerow(
                    [c.cluster, c.size]
                    + [repr(v) for v in (c.graduation_rate, c.mean_semesters, c.mean_units, c.mean_transfer_units)]
                )
        return path


def cluster_profile(records: Sequence[StudentRecord], model: KMeansModel) -> ClusterProfile:
    """Size, graduation rate and mean enrollment metadata per cluster."""
    if len(records) != model.n:
        raise DataError(f"model was fitted on {model.n} rows, got {len(records)} records")
    meta = np.array(
        [(r.graduated, r.semesters, r.units, r.transfer_units) for r in records], dtype=float
    )
    stats = []
    for j in range(model.k):
        members = meta[model.assignments == j]
        if len(members) == 0:
            raise DataError(f"cluster {j} is empty")
        means = members.mean(axis=0)
        stats.append(ClusterStats(j, len(members), *(float(v) for v in means)))
    return ClusterProfile(tuple(stats))
