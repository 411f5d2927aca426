"""Domain types, the letter-grade scale and grade-matrix construction."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import ConfigError, DataError

__all__ = [
    "LetterGrade",
    "GRADE_SCALE",
    "GRADE_VALUES",
    "encode_grade",
    "decode_grade",
    "parse_mark",
    "best_attempt",
    "Course",
    "CurriculumSpec",
    "StudentRecord",
    "GradeMatrix",
    "build_matrix",
    "subset_first_k",
]


class LetterGrade(enum.Enum):
    A = "A"
    A_MINUS = "A-"
    B_PLUS = "B+"
    B = "B"
    B_MINUS = "B-"
    C_PLUS = "C+"
    C = "C"
    C_MINUS = "C-"
    D_PLUS = "D+"
    D = "D"
    D_MINUS = "D-"
    F = "F"
    MISSING = ""

    @property
    def symbol(self) -> str:
        return self.value


# Normalized GPA scale; an untaken required course counts as an F.
GRADE_SCALE: dict[LetterGrade, float] = {
    LetterGrade.A: 2.0,
    LetterGrade.A_MINUS: 1.7,
    LetterGrade.B_PLUS: 1.3,
    LetterGrade.B: 1.0,
    LetterGrade.B_MINUS: 0.7,
    LetterGrade.C_PLUS: 0.3,
    LetterGrade.C: 0.0,
    LetterGrade.C_MINUS: -0.3,
    LetterGrade.D_PLUS: -0.7,
    LetterGrade.D: -1.0,
    LetterGrade.D_MINUS: -1.3,
    LetterGrade.F: -2.0,
}

#: The twelve legal encoded values, highest first.
GRADE_VALUES = np.array(list(GRADE_SCALE.values()))

_BY_SYMBOL = {g.symbol: g for g in GRADE_SCALE}
_BY_VALUE = {v: g for g, v in GRADE_SCALE.items()}


def encode_grade(grade: LetterGrade) -> float:
    """Map a letter grade onto the normalized scale; Missing encodes as F."""
    if grade is LetterGrade.MISSING:
        return GRADE_SCALE[LetterGrade.F]
    return GRADE_SCALE[grade]


def decode_grade(value: float) -> LetterGrade:
    """Inverse of :func:`encode_grade` on the twelve letter symbols.

    An encoded -2.0 decodes to F; imputed cells are indistinguishable from
    real failures once encoded.
    """
    try:
        return _BY_VALUE[float(value)]
    except KeyError:
        raise DataError(f"{value!r} is not a value of the grade scale") from None


def parse_mark(text: str | None) -> tuple[LetterGrade, str | None]:
    """Parse one registrar mark.

    Returns ``(grade, warning)``. Matching is case-insensitive. A blank cell
    is Missing without a warning; any other non-letter mark (W, I, NC, ...)
    is normalized to Missing and a warning message is returned, since it
    blocks graduation just like an untaken course.
    """
    if text is None:
        return LetterGrade.MISSING, None
    mark = text.strip().upper()
    if not mark:
        return LetterGrade.MISSING, None
    grade = _BY_SYMBOL.get(mark)
    if grade is None:
        return LetterGrade.MISSING, f"unrecognized mark {text.strip()!r}"
    return grade, None


def best_attempt(attempts: Iterable[LetterGrade], policy: str = "best") -> LetterGrade:
    """Collapse repeated attempts at one course into a single grade.

    ``policy="best"`` keeps the highest encoded grade, ``"last"`` keeps the
    final attempt. Missing attempts only win when nothing else was recorded.
    """
    attempts = list(attempts)
    if not attempts:
        return LetterGrade.MISSING
    if policy == "last":
        return attempts[-1]
    if policy != "best":
        raise ConfigError(f"unknown repeat policy {policy!r}")
    taken = [g for g in attempts if g is not LetterGrade.MISSING]
    if not taken:
        return LetterGrade.MISSING
    # max() keeps the first of equal grades, which is fine since equal
    # encodings imply equal letters
    return max(taken, key=encode_grade)


DIVISIONS = ("lower", "upper")


@dataclass(frozen=True)
class Course:
    course_id: str
    division: str
    pathway_position: int

    def __post_init__(self):
        if not self.course_id:
            raise DataError("empty course_id")
        if self.division not in DIVISIONS:
            raise DataError(
                f"course {self.course_id}: invalid division {self.division!r}"
            )
        if int(self.pathway_position) < 1:
            raise DataError(f"course {self.course_id}: pathway_position must be >= 1")


@dataclass(frozen=True)
class CurriculumSpec:
    """Required courses of one major, kept in pathway order."""

    courses: tuple[Course, ...]
    major_name: str = ""

    def __post_init__(self):
        courses = tuple(sorted(self.courses, key=lambda c: c.pathway_position))
        object.__setattr__(self, "courses", courses)
        if not courses:
            raise DataError("empty curriculum")
        seen: set[str] = set()
        for c in courses:
            if c.course_id in seen:
                raise DataError(f"duplicate course_id {c.course_id!r}")
            seen.add(c.course_id)
        positions = [c.pathway_position for c in courses]
        if positions != list(range(1, len(courses) + 1)):
            raise DataError("pathway positions must be unique and contiguous from 1")

    @classmethod
    def from_ids(
        cls,
        course_ids: Sequence[str],
        divisions: Sequence[str] | None = None,
        major_name: str = "",
    ) -> "CurriculumSpec":
        if divisions is None:
            divisions = ["lower"] * len(course_ids)
        return cls(
            tuple(
                Course(cid, div, i + 1)
                for i, (cid, div) in enumerate(zip(course_ids, divisions))
            ),
            major_name,
        )

    @property
    def course_ids(self) -> tuple[str, ...]:
        return tuple(c.course_id for c in self.courses)

    def __len__(self) -> int:
        return len(self.courses)

    def __getitem__(self, course_id: str) -> Course:
        for c in self.courses:
            if c.course_id == course_id:
                return c
        raise KeyError(course_id)

    def __contains__(self, course_id: object) -> bool:
        return any(c.course_id == course_id for c in self.courses)


@dataclass(frozen=True)
class StudentRecord:
    student_id: str
    graduated: bool
    semesters: int
    units: float
    transfer_units: float
    grades: Mapping[str, LetterGrade] = field(default_factory=dict)

    def __post_init__(self):
        if not self.student_id:
            raise DataError("empty student_id")
        if self.semesters < 0 or self.units < 0 or self.transfer_units < 0:
            raise DataError(f"student {self.student_id}: negative enrollment metadata")


@dataclass(frozen=True, eq=False)
class GradeMatrix:
    """Encoded n x d grade matrix bound to course columns and student rows.

    Supports ``np.asarray(matrix)`` so it can be passed straight to the
    estimators.
    """

    values: np.ndarray
    columns: tuple[str, ...]
    row_ids: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        labels = np.array(self.labels, dtype=bool)
        if values.ndim != 2:
            raise DataError("grade matrix must be two-dimensional")
        n, d = values.shape
        if len(self.columns) != d or len(self.row_ids) != n or labels.shape != (n,):
            raise DataError("grade matrix shape does not match its row/column bindings")
        if not np.isin(values, GRADE_VALUES).all():
            raise DataError("grade matrix holds values outside the grade scale")
        values.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "row_ids", tuple(self.row_ids))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values.copy() if copy else self.values
        return self.values.astype(dtype)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GradeMatrix):
            return NotImplemented
        return (
            self.columns == other.columns
            and self.row_ids == other.row_ids
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    def select_columns(self, columns: Sequence[str]) -> "GradeMatrix":
        index = {c: j for j, c in enumerate(self.columns)}
        try:
            idx = [index[c] for c in columns]
        except KeyError as exc:
            raise DataError(f"course {exc.args[0]!r} not in grade matrix") from None
        return GradeMatrix(self.values[:, idx], tuple(columns), self.row_ids, self.labels)

    def take(self, rows: Sequence[int] | np.ndarray) -> "GradeMatrix":
        rows = np.asarray(rows, dtype=int)
        return GradeMatrix(
            self.values[rows],
            self.columns,
            tuple(self.row_ids[i] for i in rows),
            self.labels[rows],
        )

    def with_labels(self, labels) -> "GradeMatrix":
        return GradeMatrix(self.values, self.columns, self.row_ids, labels)


def build_matrix(records: Sequence[StudentRecord], spec: CurriculumSpec) -> GradeMatrix:
    """Encode a cohort into a :class:`GradeMatrix`.

    Courses absent from a record are imputed as F. Columns follow the
    curriculum's pathway order.
    """
    if not records:
        raise DataError("empty cohort")
    columns = spec.course_ids
    known = set(columns)
    scale = {**GRADE_SCALE, LetterGrade.MISSING: GRADE_SCALE[LetterGrade.F]}
    missing = LetterGrade.MISSING
    rows = []
    for rec in records:
        if not known.issuperset(rec.grades):
            stray = next(c for c in rec.grades if c not in known)
            raise DataError(f"student {rec.student_id}: course {stray!r} not in curriculum")
        grades = rec.grades
        rows.append([scale[grades.get(c, missing)] for c in columns])
    values = np.array(rows, dtype=float).reshape(len(records), len(columns))
    return GradeMatrix(
        values,
        columns,
        tuple(r.student_id for r in records),
        np.array([r.graduated for r in records], dtype=bool),
    )


def subset_first_k(m: GradeMatrix, spec: CurriculumSpec, k: int) -> GradeMatrix:
    """Restrict ``m`` to the ``k`` earliest courses on the pathway."""
    if not 1 <= k <= m.d:
        raise ConfigError(f"k={k} must lie in [1, {m.d}]")
    stray = [c for c in m.columns if c not in spec]
    if stray:
        raise DataError(f"course {stray[0]!r} not in curriculum")
    present = set(m.columns)
    ordered = [c for c in spec.course_ids if c in present]
    return m.select_columns(ordered[:k])
