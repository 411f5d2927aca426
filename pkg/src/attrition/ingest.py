"""Cohort and curriculum file readers/writers.

Cohort files are UTF-8 CSV with the header::

    student_id,graduated,semesters,units,transfer_units,<course ids...>

where the course columns follow the curriculum's pathway order. Curriculum
files list one ``course_id,division`` pair per line, in pathway order.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .domain import Course, CurriculumSpec, LetterGrade, StudentRecord, best_attempt, parse_mark
from .exceptions import DataError

logger = logging.getLogger(__name__)

__all__ = [
    "METADATA_COLUMNS",
    "IngestReport",
    "read_cohort",
    "read_curriculum",
    "write_cohort",
    "write_curriculum",
]

METADATA_COLUMNS = ("student_id", "graduated", "semesters", "units", "transfer_units")

_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no"}

#: Separator for repeated attempts inside one grade cell, e.g. ``F;B``.
ATTEMPT_SEPARATOR = ";"


@dataclass
class IngestReport:
    records_read: int = 0
    rejected_rows: int = 0
    # (line number, column name, message); line 1 is the header
    warnings: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def total_rows(self) -> int:
        return self.records_read + self.rejected_rows

    def warn(self, line: int, column: str, message: str) -> None:
        self.warnings.append((line, column, message))
        logger.warning("line %d, column %s: %s", line, column, message)


def read_curriculum(path) -> CurriculumSpec:
    path = Path(path)
    courses = []
    seen = set()
    with path.open(newline="", encoding="utf-8-sig") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 'course_id,division'")
            course_id, division = row[0].strip(), row[1].strip().lower()
            if course_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate course_id {course_id!r}")
            seen.add(course_id)
            try:
                courses.append(Course(course_id, division, len(courses) + 1))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not courses:
        raise DataError("empty curriculum")
    return CurriculumSpec(tuple(courses), path.stem)


def write_curriculum(spec: CurriculumSpec, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for c in spec.courses:
            w.writerow([c.course_id, c.division])
    return path


def _check_header(header: list[str], spec: CurriculumSpec) -> None:
    header = [h.strip() for h in header]
    for col in METADATA_COLUMNS:
        if col not in header:
            raise DataError(f"missing required column {col!r}")
    expected = list(METADATA_COLUMNS) + list(spec.course_ids)
    if header == expected:
        return
    for col in header:
        if col not in expected:
            raise DataError(f"column {col!r} is not in the curriculum")
    for col in expected:
        if col not in header:
            raise DataError(f"missing course column {col!r}")
    if len(header) != len(set(header)):
        raise DataError("duplicate header column")
    raise DataError("header columns are not in curriculum order")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(text)


def _parse_count(text: str) -> int:
    v = int(text.strip())
    if v < 0:
        raise ValueError(text)
    return v


def _parse_units(text: str) -> float:
    v = float(text.strip())
    if not math.isfinite(v) or v < 0:
        raise ValueError(text)
    return v


_META_PARSERS = (_parse_bool, _parse_count, _parse_units, _parse_units)


def _parse_metadata(cells, line, report):
    values = []
    for column, parse, cell in zip(METADATA_COLUMNS[1:], _META_PARSERS, cells):
        try:
            values.append(parse(cell))
        except ValueError:
            report.rejected_rows += 1
            report.warn(line, column, f"row rejected: unparseable {column} {cell!r}")
            return None
    return values


def read_cohort(
    path, spec: CurriculumSpec, *, repeat_policy: str = "best"
) -> tuple[list[StudentRecord], IngestReport]:
    """Parse a cohort CSV into student records.

    Grade cells are matched case-insensitively; blank cells and
    non-letter marks become Missing (the latter with a warning). Rows with
    unparseable metadata are rejected individually and recorded in the
    report. A duplicate student_id rejects the whole file.
    """
    path = Path(path)
    report = IngestReport()
    records: list[StudentRecord] = []
    ids: set[str] = set()
    courses = spec.course_ids
    n_meta = len(METADATA_COLUMNS)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        _check_header(header, spec)
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != n_meta + len(courses):
                report.rejected_rows += 1
                report.warn(line, "", f"expected {n_meta + len(courses)} fields, got {len(row)}")
                continue
            student_id = row[0].strip()
            if not student_id:
                report.rejected_rows += 1
                report.warn(line, "student_id", "empty student_id")
                continue
            meta = _parse_metadata(row[1:n_meta], line, report)
            if meta is None:
                continue
            graduated, semesters, units, transfer = meta
            if student_id in ids:
                raise DataError(f"{path}:{line}: duplicate student_id {student_id!r}")
            ids.add(student_id)
            grades = {}
            for course_id, cell in zip(courses, row[n_meta:]):
                attempts = []
                for part in cell.split(ATTEMPT_SEPARATOR) if cell.strip() else [""]:
                    grade, warning = parse_mark(part)
                    if warning:
                        report.warn(line, course_id, warning)
                    attempts.append(grade)
                grades[course_id] = best_attempt(attempts, repeat_policy)
            records.append(StudentRecord(student_id, graduated, semesters, units, transfer, grades))
            report.records_read += 1
    return records, report


def _format_number(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v)


def write_cohort(records: Sequence[StudentRecord], spec: CurriculumSpec, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(METADATA_COLUMNS) + list(spec.course_ids))
        for r in records:
            w.writerow(
                [r.student_id, "1" if r.graduated else "0", str(r.semesters),
                 _format_number(r.units), _format_number(r.transfer_units)]
                + [r.grades.get(c, LetterGrade.MISSING).symbol for c in spec.course_ids]
            )
    return path
