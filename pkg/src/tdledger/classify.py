"""Map raw analyzer findings and coverage summaries onto TD instances."""

from __future__ import annotations

import datetime as dt
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from fnmatch import fnmatchcase
from fractions import Fraction
from typing import Any

import yaml

from .errors import ClassificationError, ConfigError
from .ingest import CoverageSummary, RawFinding
from .model import (
    Location,
    ProjectMeta,
    Scope,
    TDDimension,
    TDInstance,
    TDItemKind,
    dimension_of,
    format_rational,
    mint_instance_id,
)

DEFAULT_COVERAGE_THRESHOLD = Fraction(90)


class UnmatchedPolicy(str, Enum):
    COLLECT = "collect"
    REJECT = "reject"


_NOISE = re.compile(r"[\s\-_\"'.]+")


def normalize_rule_id(text: str) -> str:
    """Lowercase and drop separators, so ``Long method`` == ``LongMethod`` == ``long-method``."""
    return _NOISE.sub("", text.lower())


@dataclass(frozen=True)
class ClassificationRule:
    source_tool_pattern: str
    rule_id_pattern: str
    td_type_name: str
    item_kind: TDItemKind

    def __post_init__(self) -> None:
        if not self.source_tool_pattern or not self.rule_id_pattern:
            raise ValueError("rule patterns must be non-empty")
        object.__setattr__(self, "item_kind", TDItemKind(self.item_kind))

    def matches(self, finding: RawFinding) -> bool:
        return fnmatchcase(finding.source_tool.lower(), self.source_tool_pattern.lower()) and fnmatchcase(
            normalize_rule_id(finding.rule_id), normalize_rule_id(self.rule_id_pattern)
        )


@dataclass(frozen=True)
class Ruleset:
    rules: tuple[ClassificationRule, ...]
    unmatched_policy: UnmatchedPolicy = UnmatchedPolicy.COLLECT

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "unmatched_policy", UnmatchedPolicy(self.unmatched_policy))
        if self.unmatched_policy is UnmatchedPolicy.REJECT and not self.rules:
            raise ValueError("a rejecting ruleset needs at least one rule")

    def match(self, finding: RawFinding) -> ClassificationRule | None:
        for rule in self.rules:
            if rule.matches(finding):
                return rule
        return None


@dataclass(frozen=True)
class Unclassified:
    finding: RawFinding


_CS = TDItemKind.CODE_SMELL
_CGV = TDItemKind.CODING_GUIDELINE_VIOLATION
_ITD = TDItemKind.IMPROPER_TEST_DESIGN
_LOT = TDItemKind.LACK_OF_TESTS
_DS = TDItemKind.DESIGN_SMELL
_AS = TDItemKind.ARCHITECTURE_SMELL

# (td type name, item kind, rule id patterns). Sonar keys are matched as "<lang>:S<n>".
_DEFAULT_TABLE: list[tuple[str, TDItemKind, tuple[str, ...]]] = [
    ("Long method", _CS, ("LongMethod", "*:S138", "MethodLength")),
    ("Long parameter list", _CS, ("LongParameterList", "*:S107", "ParameterNumber")),
    ("Complex method", _CS, ("ComplexMethod", "*:S3776", "*:S1541", "CyclomaticComplexity")),
    ("Magic number", _CS, ("MagicNumber", "*:S109")),
    ("Whitespace around", _CGV, ("WhitespaceAround",)),
    ("Missing javadoc comment", _CGV, ("MissingJavadoc*", "JavadocMethod", "JavadocType", "JavadocVariable")),
    ("Line is longer than the configured limit", _CGV, ("LineLength", "*:S103")),
    ('Switch without "default" clause', _CGV, ("MissingSwitchDefault", "*:S131")),
    ("Unicode escapes should be avoided", _CGV, ("AvoidEscapedUnicodeCharacters",)),
    ("Add at least one assertion to this test case", _ITD, ("*:S2699", "*assertion*")),
    ("Add some tests to this class", _LOT, ("AddSomeTests*", "LackOfTests")),
    ("Deficient encapsulation", _DS, ("DeficientEncapsulation",)),
    ("Hub-like modularization", _DS, ("HubLikeModularization",)),
    ("Unutilized abstraction", _DS, ("UnutilizedAbstraction",)),
    ("Insufficient modularization", _DS, ("InsufficientModularization",)),
    ("Unnecessary abstraction", _DS, ("UnnecessaryAbstraction",)),
    ("Intercomponent cyclicality", _AS, ("IntercomponentCyclicality*",)),
]


def default_ruleset() -> Ruleset:
    rules = [
        ClassificationRule("*", pattern, type_name, kind)
        for type_name, kind, patterns in _DEFAULT_TABLE
        for pattern in patterns
    ]
    return Ruleset(tuple(rules), UnmatchedPolicy.COLLECT)


def ruleset_from_mapping(doc: Mapping[str, Any]) -> Ruleset:
    """Build a ruleset from a parsed config document.

    Keys: ``rules`` (list of ``{tool, rule, type, item}``), ``unmatched_policy``
    (``collect``/``reject``) and ``include_defaults`` (append the built-in rules
    after the custom ones; default true).
    """
    if not isinstance(doc, Mapping):
        raise ConfigError("ruleset document must be a mapping")
    rules = []
    for i, entry in enumerate(doc.get("rules") or []):
        try:
            rules.append(
                ClassificationRule(
                    source_tool_pattern=str(entry.get("tool", "*")),
                    rule_id_pattern=str(entry["rule"]),
                    td_type_name=str(entry["type"]),
                    item_kind=TDItemKind(entry["item"]),
                )
            )
        except (KeyError, ValueError, AttributeError, TypeError) as exc:
            raise ConfigError(f"invalid rule #{i + 1}: {exc}") from None
    if doc.get("include_defaults", True):
        rules.extend(default_ruleset().rules)
    try:
        return Ruleset(tuple(rules), UnmatchedPolicy(str(doc.get("unmatched_policy", "collect")).lower()))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_ruleset(text: str) -> Ruleset:
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"unreadable ruleset: {exc}") from None
    return ruleset_from_mapping(doc)


def classify_finding(
    f: RawFinding,
    rules: Ruleset,
    project: ProjectMeta,
    next_ordinal: int,
    recorded_at: dt.date | None = None,
) -> TDInstance | Unclassified:
    rule = rules.match(f)
    if rule is None:
        if rules.unmatched_policy is UnmatchedPolicy.REJECT:
            raise ClassificationError(f.source_tool, f.rule_id)
        return Unclassified(f)
    dimension = dimension_of(rule.item_kind)
    return TDInstance(
        id=mint_instance_id(project.slug, dimension, next_ordinal),
        td_type_name=rule.td_type_name,
        item_kind=rule.item_kind,
        location=f.location,
        responsible=(f.author,) if f.author else (),
        dimension=dimension,
        recorded_at=recorded_at or dt.date.today(),
        context=f.message,
        source_tool=f.source_tool,
    )


class OrdinalMinter:
    """Hands out the next ordinal per dimension for one project."""

    def __init__(self, start: Mapping[TDDimension, int] | None = None):
        self._next: dict[TDDimension, int] = {d: 1 for d in TDDimension}
        self._next.update(start or {})

    def peek(self, dimension: TDDimension) -> int:
        return self._next[dimension]

    def take(self, dimension: TDDimension) -> int:
        n = self._next[dimension]
        self._next[dimension] = n + 1
        return n


@dataclass
class ClassificationResult:
    instances: list[TDInstance] = field(default_factory=list)
    unclassified: list[Unclassified] = field(default_factory=list)


def classify_findings(
    findings: Iterable[RawFinding],
    rules: Ruleset,
    project: ProjectMeta,
    minter: OrdinalMinter,
    recorded_at: dt.date | None = None,
) -> ClassificationResult:
    result = ClassificationResult()
    for f in findings:
        rule = rules.match(f)
        ordinal = minter.peek(dimension_of(rule.item_kind)) if rule else 1
        out = classify_finding(f, rules, project, ordinal, recorded_at)
        if isinstance(out, Unclassified):
            result.unclassified.append(out)
        else:
            minter.take(out.dimension)
            result.instances.append(out)
    return result


def derive_coverage_findings(
    cov: CoverageSummary,
    threshold: Fraction | int = DEFAULT_COVERAGE_THRESHOLD,
    project: ProjectMeta | None = None,
    recorded_at: dt.date | None = None,
    minter: OrdinalMinter | None = None,
) -> list[TDInstance]:
    """Project-level coverage shortfall plus one lack-of-tests entry per uncovered class."""
    if project is None:
        raise ValueError("project is required")
    threshold = Fraction(threshold)
    if not 0 <= threshold <= 100:
        raise ValueError(f"threshold out of [0,100]: {threshold}")
    minter = minter or OrdinalMinter()
    day = recorded_at or dt.date.today()
    test = TDDimension.TEST
    out = []
    if cov.project_coverage < threshold:
        out.append(
            TDInstance(
                id=mint_instance_id(project.slug, test, minter.take(test)),
                td_type_name=f"Coverage below {format_rational(threshold)}%",
                item_kind=TDItemKind.INADEQUATE_TEST_COVERAGE,
                location=Location(scope=Scope.PROJECT),
                responsible=(),
                dimension=test,
                recorded_at=day,
                context=f"Line coverage is {format_rational(cov.project_coverage)}%",
                source_tool="jacoco",
            )
        )
    for qualified in sorted(cov.per_class):
        if cov.per_class[qualified] != 0:
            continue
        package, _, simple = qualified.rpartition(".")
        out.append(
            TDInstance(
                id=mint_instance_id(project.slug, test, minter.take(test)),
                td_type_name="Add some tests to this class",
                item_kind=TDItemKind.LACK_OF_TESTS,
                location=Location(scope=Scope.CLASS, package=package or None, class_name=simple),
                responsible=(),
                dimension=test,
                recorded_at=day,
                context="Class has 0% line coverage",
                source_tool="jacoco",
            )
        )
    return out
