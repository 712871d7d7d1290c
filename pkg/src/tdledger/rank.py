"""Per-attribute quality ranks and their aggregation into an overall rank."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

from .errors import IncompleteMatrixError, ParseError, RankInputError
from .model import parse_rational

GRADE_SCALE = "ABCDE"


class QualityAttribute(str, Enum):
    RELIABILITY = "Reliability"
    MAINTAINABILITY = "Maintainability"
    SECURITY = "Security"
    STABILITY = "Stability"

    @classmethod
    def parse(cls, text: str) -> QualityAttribute:
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise ValueError(f"unknown quality attribute {text!r}")


class RankMethod(str, Enum):
    COMPETITION = "competition"  # 1,2,2,4
    DENSE = "dense"  # 1,2,2,3


@dataclass(frozen=True)
class AttributeRating:
    """One tool rating. Exactly one of ``grade`` (A best) or ``score`` (higher is better)."""

    project: str
    attribute: QualityAttribute
    grade: str | None = None
    score: Fraction | None = None
    remediation_effort: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "attribute", QualityAttribute(self.attribute))
        if (self.grade is None) == (self.score is None):
            raise RankInputError(f"{self.project}/{self.attribute.value}: give a grade or a score, not both")
        if self.grade is not None:
            grade = self.grade.strip().upper()
            if grade not in GRADE_SCALE or len(grade) != 1:
                raise RankInputError(f"{self.project}: grade must be one of {GRADE_SCALE}, got {self.grade!r}")
            object.__setattr__(self, "grade", grade)
        else:
            object.__setattr__(self, "score", parse_rational(self.score))
        effort = parse_rational(self.remediation_effort)
        if effort < 0:
            raise RankInputError(f"{self.project}: remediation effort must be non-negative")
        object.__setattr__(self, "remediation_effort", effort)

    def sort_key(self) -> tuple[Fraction, Fraction]:
        quality = Fraction(GRADE_SCALE.index(self.grade)) if self.grade is not None else -self.score
        return quality, self.remediation_effort


@dataclass(frozen=True)
class RankTable:
    project: str
    ranks: dict[QualityAttribute, int]
    sum: int
    overall_rank: int


def rank_values(keys: Mapping[str, Any], method: RankMethod = RankMethod.COMPETITION) -> dict[str, int]:
    """Rank by ascending key; equal keys share a rank."""
    method = RankMethod(method)
    ordered = sorted(set(keys.values()))
    if method is RankMethod.DENSE:
        position = {k: i + 1 for i, k in enumerate(ordered)}
        return {p: position[k] for p, k in keys.items()}
    values = sorted(keys.values())
    first = {}
    for i, k in enumerate(values):
        first.setdefault(k, i + 1)
    return {p: first[k] for p, k in keys.items()}


def rank_attribute(
    ratings: Iterable[AttributeRating], method: RankMethod = RankMethod.COMPETITION
) -> dict[str, int]:
    """Better grade first; equal grades are split by lower remediation effort."""
    ratings = list(ratings)
    if not ratings:
        return {}
    attributes = {r.attribute for r in ratings}
    if len(attributes) > 1:
        names = ", ".join(sorted(a.value for a in attributes))
        raise RankInputError(f"ratings mix attributes: {names}")
    if len({r.grade is None for r in ratings}) > 1:
        raise RankInputError(f"{ratings[0].attribute.value}: letter grades and numeric scores cannot be mixed")
    keys: dict[str, tuple[Fraction, Fraction]] = {}
    for r in ratings:
        if r.project in keys:
            raise RankInputError(f"duplicate rating for project {r.project!r}")
        keys[r.project] = r.sort_key()
    return rank_values(keys, method)


def aggregate_overall(
    per_attribute_ranks: Mapping[QualityAttribute, Mapping[str, int]],
    method: RankMethod = RankMethod.COMPETITION,
) -> dict[str, RankTable]:
    attrs = [QualityAttribute(a) for a in per_attribute_ranks]
    by_attr = {QualityAttribute(a): dict(v) for a, v in per_attribute_ranks.items()}
    projects = sorted({p for ranks in by_attr.values() for p in ranks})
    sums: dict[str, int] = {}
    for project in projects:
        total = 0
        for attr in attrs:
            if project not in by_attr[attr]:
                raise IncompleteMatrixError(project, attr.value)
            total += by_attr[attr][project]
        sums[project] = total
    overall = rank_values(sums, method)
    return {
        p: RankTable(
            project=p,
            ranks={a: by_attr[a][p] for a in attrs},
            sum=sums[p],
            overall_rank=overall[p],
        )
        for p in projects
    }


def rank_ratings(
    ratings: Iterable[AttributeRating], method: RankMethod = RankMethod.COMPETITION
) -> dict[str, RankTable]:
    grouped: dict[QualityAttribute, list[AttributeRating]] = {}
    for r in ratings:
        grouped.setdefault(r.attribute, []).append(r)
    ordered = {a: grouped[a] for a in QualityAttribute if a in grouped}
    return aggregate_overall({a: rank_attribute(rs, method) for a, rs in ordered.items()}, method)


def parse_ratings_csv(data: bytes | str, source: str = "ratings") -> list[AttributeRating]:
    """Rows of ``project, attribute, grade-or-score, effort`` under a header row.

    A letter in the third column is a grade; anything numeric is a score.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(source, "not valid UTF-8", f"byte offset {exc.start}") from None
    reader = csv.reader(io.StringIO(data, newline=""))
    out = []
    try:
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise ParseError(source, "expected header 'project,attribute,rating[,effort]'", "line 1")
        for row in reader:
            where = f"line {reader.line_num}"
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) not in (3, 4):
                raise ParseError(source, f"expected 3 or 4 fields, got {len(row)}", where)
            project, attribute, rating = (c.strip() for c in row[:3])
            effort = row[3].strip() if len(row) == 4 and row[3].strip() else "0"
            try:
                attr = QualityAttribute.parse(attribute)
                if rating[:1].isalpha():
                    r = AttributeRating(project, attr, grade=rating, remediation_effort=Fraction(effort))
                else:
                    r = AttributeRating(project, attr, score=Fraction(rating), remediation_effort=Fraction(effort))
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError(source, str(exc), where) from None
            out.append(r)
    except csv.Error as exc:
        raise ParseError(source, f"malformed CSV: {exc}", f"line {reader.line_num}") from None
    return out


def rank_tables_to_dict(tables: Mapping[str, RankTable]) -> list[dict[str, Any]]:
    rows = sorted(tables.values(), key=lambda t: (t.overall_rank, t.project))
    return [
        {
            "project": t.project,
            "ranks": {a.value: r for a, r in t.ranks.items()},
            "sum": t.sum,
            "overall_rank": t.overall_rank,
        }
        for t in rows
    ]
