"""TD taxonomy and the structured TD-instance record.

Everything here is an immutable value. Serialization helpers produce the
canonical JSON shape used by snapshots and reports.
"""

from __future__ import annotations

import datetime as dt
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Any

from .errors import DuplicateIdError, InvalidSlugError


class TDDimension(str, Enum):
    CODE = "Code"
    DESIGN = "Design"
    TEST = "Test"
    ARCHITECTURE = "Architecture"
    DOCUMENTATION = "Documentation"
    ENVIRONMENT = "Environment"

    @property
    def code(self) -> str:
        return DIMENSION_CODES[self]

    @property
    def label(self) -> str:
        return f"{self.value} debt"


DIMENSION_CODES: dict[TDDimension, str] = {
    TDDimension.CODE: "cd",
    TDDimension.DESIGN: "dd",
    TDDimension.TEST: "td",
    TDDimension.ARCHITECTURE: "ad",
    TDDimension.DOCUMENTATION: "dod",
    TDDimension.ENVIRONMENT: "ed",
}
_DIMENSION_BY_CODE = {code: dim for dim, code in DIMENSION_CODES.items()}


class TDItemKind(str, Enum):
    CODE_SMELL = "CodeSmell"
    CODING_GUIDELINE_VIOLATION = "CodingGuidelineViolation"
    INCONSISTENT_STYLE = "InconsistentStyle"
    DESIGN_SMELL = "DesignSmell"
    DESIGN_RULE_VIOLATION = "DesignRuleViolation"
    DESIGN_CONSTRAINT_VIOLATION = "DesignConstraintViolation"
    LACK_OF_TESTS = "LackOfTests"
    INADEQUATE_TEST_COVERAGE = "InadequateTestCoverage"
    IMPROPER_TEST_DESIGN = "ImproperTestDesign"
    ARCHITECTURE_SMELL = "ArchitectureSmell"
    ARCHITECTURE_RULE_VIOLATION = "ArchitectureRuleViolation"
    MODULARITY_VIOLATION = "ModularityViolation"

    @property
    def dimension(self) -> TDDimension:
        return dimension_of(self)

    @property
    def label(self) -> str:
        return ITEM_LABELS[self]


_ITEM_DIMENSIONS: dict[TDItemKind, TDDimension] = {
    TDItemKind.CODE_SMELL: TDDimension.CODE,
    TDItemKind.CODING_GUIDELINE_VIOLATION: TDDimension.CODE,
    TDItemKind.INCONSISTENT_STYLE: TDDimension.CODE,
    TDItemKind.DESIGN_SMELL: TDDimension.DESIGN,
    TDItemKind.DESIGN_RULE_VIOLATION: TDDimension.DESIGN,
    TDItemKind.DESIGN_CONSTRAINT_VIOLATION: TDDimension.DESIGN,
    TDItemKind.LACK_OF_TESTS: TDDimension.TEST,
    TDItemKind.INADEQUATE_TEST_COVERAGE: TDDimension.TEST,
    TDItemKind.IMPROPER_TEST_DESIGN: TDDimension.TEST,
    TDItemKind.ARCHITECTURE_SMELL: TDDimension.ARCHITECTURE,
    TDItemKind.ARCHITECTURE_RULE_VIOLATION: TDDimension.ARCHITECTURE,
    TDItemKind.MODULARITY_VIOLATION: TDDimension.ARCHITECTURE,
}

ITEM_LABELS: dict[TDItemKind, str] = {
    TDItemKind.CODE_SMELL: "Code smells",
    TDItemKind.CODING_GUIDELINE_VIOLATION: "Coding guideline violation",
    TDItemKind.INCONSISTENT_STYLE: "Inconsistent style",
    TDItemKind.DESIGN_SMELL: "Design smells",
    TDItemKind.DESIGN_RULE_VIOLATION: "Design rule violations",
    TDItemKind.DESIGN_CONSTRAINT_VIOLATION: "Violation of design constraints",
    TDItemKind.LACK_OF_TESTS: "Lack of tests",
    TDItemKind.INADEQUATE_TEST_COVERAGE: "Inadequate test coverage",
    TDItemKind.IMPROPER_TEST_DESIGN: "Improper test design",
    TDItemKind.ARCHITECTURE_SMELL: "Architecture smell",
    TDItemKind.ARCHITECTURE_RULE_VIOLATION: "Architecture rule violations",
    TDItemKind.MODULARITY_VIOLATION: "Modularity violations",
}


def dimension_of(kind: TDItemKind) -> TDDimension:
    return _ITEM_DIMENSIONS[TDItemKind(kind)]


class Intentionality(str, Enum):
    INTENTIONAL = "Intentional"
    UNINTENTIONAL = "Unintentional"
    UNKNOWN = "Unknown"


class Scope(str, Enum):
    LINE = "Line"
    METHOD = "Method"
    CLASS = "Class"
    PACKAGE = "Package"
    PROJECT = "Project"
    CROSS_PACKAGE = "CrossPackage"


@dataclass(frozen=True)
class Location:
    scope: Scope
    file_path: str | None = None
    package: str | None = None
    class_name: str | None = None
    method_name: str | None = None
    line: int | None = None

    def without_line(self) -> Location:
        return replace(self, line=None)

    def describe(self) -> str:
        """Human phrasing in the style ``Line 193 in class Foo in package a.b``."""
        if self.scope is Scope.PROJECT:
            return "All source files"
        parts = []
        if self.scope is Scope.LINE and self.line is not None:
            parts.append(f"Line {self.line}")
        if self.method_name:
            parts.append(f"Method {self.method_name}")
        if self.class_name:
            parts.append(f"class {self.class_name}")
        if self.package:
            noun = "packages" if self.scope is Scope.CROSS_PACKAGE else "package"
            parts.append(f"{noun} {self.package}")
        if not parts and self.file_path:
            parts.append(self.file_path)
        text = " in ".join(parts)
        if self.file_path and (self.class_name or self.package) and self.scope is Scope.LINE:
            text += f" ({self.file_path})"
        return text[:1].upper() + text[1:] if text else self.scope.value


def location_violations(loc: Location) -> list[str]:
    problems = []
    if loc.line is not None and (isinstance(loc.line, bool) or not isinstance(loc.line, int) or loc.line < 1):
        problems.append(f"line must be a positive integer, got {loc.line!r}")
    if loc.scope is Scope.LINE:
        if loc.line is None:
            problems.append("scope Line requires a line number")
        if not loc.file_path:
            problems.append("scope Line requires a file path")
    elif loc.scope is Scope.PROJECT:
        narrow = [
            name
            for name in ("file_path", "package", "class_name", "method_name", "line")
            if getattr(loc, name) is not None
        ]
        if narrow:
            problems.append(f"scope Project forbids narrower fields: {', '.join(narrow)}")
    return problems


@dataclass(frozen=True)
class TDInstance:
    id: str
    td_type_name: str
    item_kind: TDItemKind
    location: Location
    responsible: tuple[str, ...]
    dimension: TDDimension
    recorded_at: dt.date
    context: str = ""
    propagation: str = ""
    intentionality: Intentionality = Intentionality.UNKNOWN
    source_tool: str = ""
    repayment_note: str | None = None


_SLUG_RE = re.compile(r"^[a-z0-9]+$")
_ID_RE = re.compile(r"^(?P<slug>[^_]+)_(?P<code>[a-z]+)_(?P<ordinal>-?\d+)$")


@dataclass(frozen=True)
class ProjectMeta:
    name: str
    slug: str
    loc: int = 0
    num_classes: int = 0
    coverage_percent: Fraction = Fraction(100)

    def __post_init__(self) -> None:
        if not _SLUG_RE.match(self.slug or ""):
            raise InvalidSlugError(f"project slug must be non-empty lowercase alphanumeric: {self.slug!r}")
        if self.loc < 0 or self.num_classes < 0:
            raise ValueError("loc and num_classes must be non-negative")
        object.__setattr__(self, "coverage_percent", parse_rational(self.coverage_percent))
        if not 0 <= self.coverage_percent <= 100:
            raise ValueError(f"coverage_percent out of [0,100]: {self.coverage_percent}")


def mint_instance_id(project_slug: str, dimension: TDDimension, ordinal: int) -> str:
    if not project_slug or "_" in project_slug:
        raise InvalidSlugError(f"invalid project slug {project_slug!r}")
    if ordinal < 1:
        raise ValueError(f"ordinal must be >= 1, got {ordinal}")
    return f"{project_slug}_{TDDimension(dimension).code}_{ordinal}"


def parse_instance_id(instance_id: str) -> tuple[str, TDDimension, int] | None:
    m = _ID_RE.match(instance_id)
    if not m or m["code"] not in _DIMENSION_BY_CODE:
        return None
    return m["slug"], _DIMENSION_BY_CODE[m["code"]], int(m["ordinal"])


def validate_instance(inst: TDInstance, project_slug: str | None = None) -> list[str]:
    """Return every invariant violation of ``inst``; an empty list means valid."""
    violations = []
    expected = dimension_of(inst.item_kind)
    if inst.dimension is not expected:
        violations.append(
            f"dimension mismatch: item {inst.item_kind.value} belongs to {expected.value}, "
            f"got {inst.dimension.value}"
        )
    parsed = parse_instance_id(inst.id)
    if parsed is None:
        violations.append(f"malformed id {inst.id!r}")
    else:
        slug, dim, ordinal = parsed
        if ordinal < 1:
            violations.append(f"id {inst.id!r}: ordinal must be >= 1")
        if dim is not inst.dimension:
            violations.append(f"id {inst.id!r}: code {dim.code} does not match dimension {inst.dimension.value}")
        if project_slug is not None and slug != project_slug:
            violations.append(f"id {inst.id!r}: slug does not match project {project_slug!r}")
    violations.extend(location_violations(inst.location))
    return violations


class ItemCounts(Mapping[TDItemKind, int]):
    """Tally of instances per item kind. Absent kinds read as zero."""

    def __init__(self, counts: Mapping[TDItemKind, int] | None = None):
        data: dict[TDItemKind, int] = {}
        for kind, n in (counts or {}).items():
            kind = TDItemKind(kind)
            if n < 0:
                raise ValueError(f"negative count for {kind.value}")
            if n:
                data[kind] = int(n)
        self._data = data

    def __getitem__(self, kind: TDItemKind) -> int:
        return self._data.get(TDItemKind(kind), 0)

    def __iter__(self) -> Iterator[TDItemKind]:
        return (k for k in TDItemKind if k in self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, kind: object) -> bool:
        return kind in self._data

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ItemCounts):
            return self._data == other._data
        if isinstance(other, Mapping):
            return self._data == {TDItemKind(k): v for k, v in other.items() if v}
        return NotImplemented

    def __add__(self, other: ItemCounts) -> ItemCounts:
        return ItemCounts({k: self[k] + other[k] for k in TDItemKind})

    def __repr__(self) -> str:
        inner = ", ".join(f"{k.value}: {v}" for k, v in self.items())
        return f"ItemCounts({{{inner}}})"

    @property
    def total(self) -> int:
        return sum(self._data.values())

    def to_dict(self) -> dict[str, int]:
        return {k.value: v for k, v in self.items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> ItemCounts:
        return cls({TDItemKind(k): int(v) for k, v in data.items()})


def count_by_item(instances: Iterable[TDInstance]) -> ItemCounts:
    """Count instances per item kind.

    Project-scope inadequate-coverage instances describe the whole project,
    so at most one of them is counted per project slug.
    """
    instances = list(instances)
    seen: set[str] = set()
    dupes = []
    for inst in instances:
        if inst.id in seen:
            dupes.append(inst.id)
        seen.add(inst.id)
    if dupes:
        raise DuplicateIdError(sorted(set(dupes)))

    counts: dict[TDItemKind, int] = {}
    coverage_projects: set[str] = set()
    for inst in instances:
        if inst.item_kind is TDItemKind.INADEQUATE_TEST_COVERAGE and inst.location.scope is Scope.PROJECT:
            project = inst.id.split("_", 1)[0]
            if project in coverage_projects:
                continue
            coverage_projects.add(project)
        counts[inst.item_kind] = counts.get(inst.item_kind, 0) + 1
    return ItemCounts(counts)


# -- serialization ----------------------------------------------------------


def format_rational(value: Fraction | int) -> str:
    """Exact text for a rational: terminating decimals as decimals, else ``p/q``."""
    value = Fraction(value)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(value.numerator)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(int(scaled)), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def format_2dp(value: Fraction | int) -> str:
    """Round half away from zero to two decimals, e.g. ``92.34``."""
    value = Fraction(value)
    cents = abs(value) * 100
    q, r = divmod(cents, 1)
    q = int(q) + (1 if r >= Fraction(1, 2) else 0)
    sign = "-" if value < 0 and q else ""
    return f"{sign}{q // 100}.{q % 100:02d}"


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, float):
        # via repr so 64.2 means the decimal 64.2, not its binary approximation
        return Fraction(repr(value))
    return Fraction(value)


def location_to_dict(loc: Location) -> dict[str, Any]:
    return {
        "scope": loc.scope.value,
        "file_path": loc.file_path,
        "package": loc.package,
        "class_name": loc.class_name,
        "method_name": loc.method_name,
        "line": loc.line,
    }


def location_from_dict(data: Mapping[str, Any]) -> Location:
    return Location(
        scope=Scope(data["scope"]),
        file_path=data.get("file_path"),
        package=data.get("package"),
        class_name=data.get("class_name"),
        method_name=data.get("method_name"),
        line=data.get("line"),
    )


def instance_to_dict(inst: TDInstance) -> dict[str, Any]:
    return {
        "id": inst.id,
        "td_type_name": inst.td_type_name,
        "td_item_name": inst.item_kind.value,
        "location": location_to_dict(inst.location),
        "responsible": list(inst.responsible),
        "dimension": inst.dimension.value,
        "date_time": inst.recorded_at.isoformat(),
        "context": inst.context,
        "propagation": inst.propagation,
        "intentionality": inst.intentionality.value,
        "source_tool": inst.source_tool,
        "repayment_note": inst.repayment_note,
    }


def instance_from_dict(data: Mapping[str, Any]) -> TDInstance:
    return TDInstance(
        id=data["id"],
        td_type_name=data["td_type_name"],
        item_kind=TDItemKind(data["td_item_name"]),
        location=location_from_dict(data["location"]),
        responsible=tuple(data.get("responsible") or ()),
        dimension=TDDimension(data["dimension"]),
        recorded_at=dt.date.fromisoformat(data["date_time"]),
        context=data.get("context", ""),
        propagation=data.get("propagation", ""),
        intentionality=Intentionality(data.get("intentionality", "Unknown")),
        source_tool=data.get("source_tool", ""),
        repayment_note=data.get("repayment_note"),
    )


def project_to_dict(project: ProjectMeta) -> dict[str, Any]:
    return {
        "name": project.name,
        "slug": project.slug,
        "loc": project.loc,
        "num_classes": project.num_classes,
        "coverage_percent": format_rational(project.coverage_percent),
    }


def project_from_dict(data: Mapping[str, Any]) -> ProjectMeta:
    return ProjectMeta(
        name=str(data["name"]),
        slug=str(data["slug"]),
        loc=int(data.get("loc", 0)),
        num_classes=int(data.get("num_classes", 0)),
        coverage_percent=parse_rational(data.get("coverage_percent", 100)),
    )


__all__ = [
    "DIMENSION_CODES",
    "ITEM_LABELS",
    "Intentionality",
    "ItemCounts",
    "Location",
    "ProjectMeta",
    "Scope",
    "TDDimension",
    "TDInstance",
    "TDItemKind",
    "count_by_item",
    "dimension_of",
    "format_2dp",
    "format_rational",
    "instance_from_dict",
    "instance_to_dict",
    "location_violations",
    "mint_instance_id",
    "parse_instance_id",
    "parse_rational",
    "validate_instance",
]
