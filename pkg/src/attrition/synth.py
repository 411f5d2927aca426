"""Seeded synthetic cohorts with a planted graduate / non-graduate split.

Each course carries one mean grade per group. A student's grade is drawn
from a normal distribution, clipped to [-2, 2] and snapped to the nearest
letter on the grade scale. Because the letter lattice is uneven, the
normal's location is solved for numerically so that the *expected encoded
grade* equals the configured group mean.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .domain import (
    GRADE_SCALE,
    GRADE_VALUES,
    Course,
    CurriculumSpec,
    LetterGrade,
    StudentRecord,
)
from .exceptions import ConfigError

__all__ = [
    "CourseParams",
    "GroupParams",
    "CohortSpec",
    "generate_cohort",
    "default_department_spec",
    "snap_to_scale",
    "expected_grade",
    "latent_location",
    "BOTTLENECK_COURSE",
]

_ASCENDING = np.sort(GRADE_VALUES)
_MIDPOINTS = (_ASCENDING[1:] + _ASCENDING[:-1]) / 2
_LETTER_BY_VALUE = {v: g for g, v in GRADE_SCALE.items()}


def snap_to_scale(x) -> np.ndarray:
    """Nearest grade-scale value; a point exactly between two letters goes up."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return _ASCENDING[np.searchsorted(_MIDPOINTS, x, side="right")]


def expected_grade(location: float, sd: float) -> float:
    """E[snap(clip(N(location, sd^2)))] in closed form."""
    if sd == 0:
        return float(snap_to_scale(location))
    cdf = ndtr((_MIDPOINTS - location) / sd)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    return float(probs @ _ASCENDING)


@lru_cache(maxsize=4096)
def latent_location(mean: float, sd: float) -> float:
    """Normal location whose clipped, snapped draws average to ``mean``.

    Means at the very ends of the scale are only reachable in the limit;
    the search is bounded at ten standard deviations past the scale.
    """
    if sd == 0:
        return mean
    lo, hi = -2.0 - 10 * sd, 2.0 + 10 * sd
    f = lambda loc: expected_grade(loc, sd) - mean  # noqa: E731
    if f(lo) >= 0:
        return lo
    if f(hi) <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class CourseParams:
    course_id: str
    division: str
    # (graduate group, non-graduate group)
    means: tuple[float, float]
    stddev: float
    missing_prob: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "missing_prob", tuple(float(v) for v in self.missing_prob))
        if self.division not in ("lower", "upper"):
            raise ConfigError(f"{self.course_id}: invalid division {self.division!r}")
        if len(self.means) != 2 or any(not -2.0 <= m <= 2.0 for m in self.means):
            raise ConfigError(f"{self.course_id}: group means must lie in [-2, 2]")
        if not self.stddev >= 0:
            raise ConfigError(f"{self.course_id}: stddev must be non-negative")
        if len(self.missing_prob) != 2 or any(not 0.0 <= p <= 1.0 for p in self.missing_prob):
            raise ConfigError(f"{self.course_id}: missing probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class GroupParams:
    """Enrollment metadata distributions of one group: (mean, stddev) pairs."""

    semesters: tuple[float, float]
    units: tuple[float, float]
    transfer_units: tuple[float, float]

    def __post_init__(self):
        for name in ("semesters", "units", "transfer_units"):
            mean, sd = getattr(self, name)
            if mean < 0 or sd < 0:
                raise ConfigError(f"{name}: mean and stddev must be non-negative")
            object.__setattr__(self, name, (float(mean), float(sd)))


@dataclass(frozen=True)
class CohortSpec:
    n_students: int
    graduate_fraction: float
    courses: tuple[CourseParams, ...]
    graduates: GroupParams
    non_graduates: GroupParams
    seed: int = 0
    major_name: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "courses", tuple(self.courses))
        if int(self.n_students) < 2:
            raise ConfigError("n_students must be >= 2")
        if not 0.0 <= self.graduate_fraction <= 1.0:
            raise ConfigError("graduate_fraction must lie in [0, 1]")
        if not self.courses:
            raise ConfigError("at least one course is required")
        ids = [c.course_id for c in self.courses]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate course_id in cohort spec")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def curriculum(self) -> CurriculumSpec:
        return CurriculumSpec(
            tuple(Course(c.course_id, c.division, i + 1) for i, c in enumerate(self.courses)),
            self.major_name,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "CohortSpec":
        try:
            return cls(
                n_students=int(data["n_students"]),
                graduate_fraction=float(data["graduate_fraction"]),
                courses=tuple(
                    CourseParams(
                        c["course_id"],
                        c["division"],
                        tuple(c["means"]),
                        float(c["stddev"]),
                        tuple(c.get("missing_prob", (0.0, 0.0))),
                    )
                    for c in data["courses"]
                ),
                graduates=GroupParams(**_group_fields(data["graduates"])),
                non_graduates=GroupParams(**_group_fields(data["non_graduates"])),
                seed=int(data.get("seed", 0)),
                major_name=data.get("major_name", "synthetic"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid cohort spec: {exc!r}") from None

    @classmethod
    def from_json(cls, path) -> "CohortSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid cohort spec JSON: {exc}") from None
        return cls.from_dict(data)


def _group_fields(d: dict) -> dict:
    return {k: tuple(d[k]) for k in ("semesters", "units", "transfer_units")}


def _draw_nonneg(rng, mean_sd: np.ndarray) -> np.ndarray:
    # rounded to whole semesters / units, floored at zero
    x = rng.normal(mean_sd[:, 0], mean_sd[:, 1])
    return np.maximum(np.rint(x), 0.0)


def generate_cohort(spec: CohortSpec):
    """Draw a cohort from ``spec``.

    Returns ``(records, curriculum, planted)`` where ``planted`` is the
    boolean graduate-group indicator per student (also the graduated flag).
    Exactly ``round(n_students * graduate_fraction)`` students are graduates.
    """
    rng = np.random.default_rng(int(spec.seed))
    n = int(spec.n_students)
    n_grad = int(round(n * spec.graduate_fraction))
    planted = np.zeros(n, dtype=bool)
    planted[rng.permutation(n)[:n_grad]] = True
    group = np.where(planted, 0, 1)

    grades = {}
    for c in spec.courses:
        loc = np.array([latent_location(m, c.stddev) for m in c.means])
        snapped = snap_to_scale(loc[group] + c.stddev * rng.standard_normal(n))
        missing = rng.random(n) < np.asarray(c.missing_prob)[group]
        grades[c.course_id] = [
            LetterGrade.MISSING if miss else _LETTER_BY_VALUE[v]
            for v, miss in zip(snapped.tolist(), missing.tolist())
        ]

    meta = {}
    for name in ("semesters", "units", "transfer_units"):
        params = np.array([getattr(spec.graduates, name), getattr(spec.non_graduates, name)])
        meta[name] = _draw_nonneg(rng, params[group])

    records = [
        StudentRecord(
            student_id=f"S{i:05d}",
            graduated=bool(planted[i]),
            semesters=int(meta["semesters"][i]),
            units=float(meta["units"][i]),
            transfer_units=float(meta["transfer_units"][i]),
            grades={cid: grades[cid][i] for cid in grades},
        )
        for i in range(n)
    ]
    return records, spec.curriculum(), planted


#: Course carrying the planted inter-group gap in the default department.
BOTTLENECK_COURSE = "C001"

N_DEFAULT_COURSES = 113
N_DEFAULT_LOWER = 30


def default_department_spec(seed: int = 0) -> CohortSpec:
    """A 2000-student, 113-course department.

    The first pathway course is a lower-division bottleneck whose group
    means differ by 2.0; the next two lower-division courses differ by 0.4
    and every other course by 0.10-0.30. Graduates make up 60% of the
    cohort; non-graduates stay four semesters on average.
    """
    courses = [
        CourseParams(BOTTLENECK_COURSE, "lower", (1.0, -1.0), 0.9, (0.01, 0.03)),
        CourseParams("C002", "lower", (0.7, 0.3), 0.8, (0.01, 0.03)),
        CourseParams("C003", "lower", (0.6, 0.2), 0.8, (0.01, 0.03)),
    ]
    for pos in range(4, N_DEFAULT_COURSES + 1):
        j = pos - 4
        gap = 0.10 + 0.05 * (j % 5)
        top = 0.6 - 0.1 * (j % 3)
        division = "lower" if pos <= N_DEFAULT_LOWER else "upper"
        courses.append(
            CourseParams(f"C{pos:03d}", division, (top, top - gap), 0.8, (0.01, 0.04))
        )
    return CohortSpec(
        n_students=2000,
        graduate_fraction=0.6,
        courses=tuple(courses),
        graduates=GroupParams(semesters=(9.0, 1.5), units=(120.0, 10.0), transfer_units=(30.0, 20.0)),
        non_graduates=GroupParams(semesters=(4.0, 1.5), units=(55.0, 20.0), transfer_units=(20.0, 15.0)),
        seed=seed,
        major_name="synthetic-department",
    )
