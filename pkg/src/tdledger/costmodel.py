"""TD principal estimation from item counts.

All arithmetic is done with :class:`fractions.Fraction`; decimal text only
appears when rendering (see :func:`tdledger.model.format_2dp`).
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import ConfigError, MissingCostError
from .model import (
    ItemCounts,
    ProjectMeta,
    TDItemKind,
    format_2dp,
    format_rational,
    parse_rational,
    project_from_dict,
    project_to_dict,
)

K = TDItemKind

# Config keys, one per item kind. Inadequate coverage has no per-count cost.
COST_FIELDS: dict[TDItemKind, str] = {
    K.CODE_SMELL: "cost_to_fix_a_code_smell",
    K.CODING_GUIDELINE_VIOLATION: "cost_to_fix_a_coding_guideline_violation",
    K.IMPROPER_TEST_DESIGN: "cost_to_fix_an_improper_test_design",
    K.LACK_OF_TESTS: "cost_to_fix_a_lack_of_test",
    K.DESIGN_SMELL: "cost_to_fix_a_design_smell",
    K.ARCHITECTURE_SMELL: "cost_to_fix_an_architecture_smell",
    K.INCONSISTENT_STYLE: "cost_to_fix_an_inconsistent_style",
    K.DESIGN_RULE_VIOLATION: "cost_to_fix_a_design_rule_violation",
    K.DESIGN_CONSTRAINT_VIOLATION: "cost_to_fix_a_design_constraint_violation",
    K.ARCHITECTURE_RULE_VIOLATION: "cost_to_fix_an_architecture_rule_violation",
    K.MODULARITY_VIOLATION: "cost_to_fix_a_modularity_violation",
}

# Breakdown term names, in formula order.
TERM_NAMES: dict[TDItemKind, str] = {
    K.CODE_SMELL: "code_smells",
    K.CODING_GUIDELINE_VIOLATION: "coding_guideline_violations",
    K.IMPROPER_TEST_DESIGN: "improper_test_designs",
    K.LACK_OF_TESTS: "lack_of_tests",
    K.INADEQUATE_TEST_COVERAGE: "coverage_gap",
    K.DESIGN_SMELL: "design_smells",
    K.ARCHITECTURE_SMELL: "architecture_smells",
    K.INCONSISTENT_STYLE: "inconsistent_styles",
    K.DESIGN_RULE_VIOLATION: "design_rule_violations",
    K.DESIGN_CONSTRAINT_VIOLATION: "design_constraint_violations",
    K.ARCHITECTURE_RULE_VIOLATION: "architecture_rule_violations",
    K.MODULARITY_VIOLATION: "modularity_violations",
}
COVERAGE_TERM = TERM_NAMES[K.INADEQUATE_TEST_COVERAGE]

DEFAULT_COSTS: dict[TDItemKind, Fraction] = {
    K.CODE_SMELL: Fraction(5),
    K.CODING_GUIDELINE_VIOLATION: Fraction(1),
    K.IMPROPER_TEST_DESIGN: Fraction(4),
    K.LACK_OF_TESTS: Fraction(2),
    K.DESIGN_SMELL: Fraction(15),
    K.ARCHITECTURE_SMELL: Fraction(25),
    K.INCONSISTENT_STYLE: Fraction(0),
    K.DESIGN_RULE_VIOLATION: Fraction(0),
    K.DESIGN_CONSTRAINT_VIOLATION: Fraction(0),
    K.ARCHITECTURE_RULE_VIOLATION: Fraction(0),
    K.MODULARITY_VIOLATION: Fraction(0),
}

SONAR_SUBSET = frozenset({K.CODE_SMELL, K.LACK_OF_TESTS, K.IMPROPER_TEST_DESIGN})


@dataclass(frozen=True)
class CostModel:
    cost_per_item: Mapping[TDItemKind, Fraction] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    coverage_threshold: Fraction = Fraction(90)
    included_items: frozenset[TDItemKind] = frozenset(TDItemKind)
    clamp_coverage_term: bool = True

    def __post_init__(self) -> None:
        costs = {TDItemKind(k): parse_rational(v) for k, v in self.cost_per_item.items()}
        if any(v < 0 for v in costs.values()):
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "cost_per_item", costs)
        object.__setattr__(self, "included_items", frozenset(TDItemKind(k) for k in self.included_items))
        threshold = parse_rational(self.coverage_threshold)
        if not 0 <= threshold <= 100:
            raise ValueError(f"coverage_threshold out of [0,100]: {threshold}")
        object.__setattr__(self, "coverage_threshold", threshold)


@dataclass(frozen=True)
class Estimate:
    total_person_hours: Fraction
    breakdown: dict[str, Fraction]
    counts: ItemCounts
    project: ProjectMeta
    threshold: Fraction

    @property
    def display_total(self) -> str:
        return format_2dp(self.total_person_hours)


def default_cost_model() -> CostModel:
    return CostModel()


def sonar_subset_model() -> CostModel:
    """Default costs restricted to code smells, lack of tests and improper test design."""
    return CostModel(included_items=SONAR_SUBSET)


def coverage_gap_cost(coverage: Fraction, threshold: Fraction, loc: int, clamp: bool = True) -> Fraction:
    coverage = parse_rational(coverage)
    threshold = parse_rational(threshold)
    if clamp and coverage >= threshold:
        return Fraction(0)
    return (threshold - coverage) * Fraction(loc, 1000)


def estimate_principal(counts: ItemCounts, project: ProjectMeta, model: CostModel) -> Estimate:
    counts = counts if isinstance(counts, ItemCounts) else ItemCounts(counts)
    breakdown: dict[str, Fraction] = {}
    for kind, term in TERM_NAMES.items():
        if kind not in model.included_items:
            continue
        if kind is K.INADEQUATE_TEST_COVERAGE:
            breakdown[term] = coverage_gap_cost(
                project.coverage_percent, model.coverage_threshold, project.loc, model.clamp_coverage_term
            )
            continue
        n = counts[kind]
        if not n:
            continue
        if kind not in model.cost_per_item:
            raise MissingCostError(kind.value)
        value = model.cost_per_item[kind] * n
        if value:
            breakdown[term] = value
    return Estimate(
        total_person_hours=sum(breakdown.values(), Fraction(0)),
        breakdown=breakdown,
        counts=counts,
        project=project,
        threshold=model.coverage_threshold,
    )


def cost_model_from_mapping(doc: Mapping[str, Any] | None) -> CostModel:
    """Build a model from config keys named after the cost table.

    ``preset`` picks the base (``full`` or ``sonar-subset``); individual
    ``cost_to_fix_*`` keys, ``expected_coverage`` (alias
    ``coverage_threshold``), ``included_items`` and ``clamp_coverage_term``
    override it.
    """
    doc = dict(doc or {})
    preset = str(doc.pop("preset", "full")).lower()
    if preset == "full":
        base = default_cost_model()
    elif preset in ("sonar-subset", "sonar_subset", "sonar"):
        base = sonar_subset_model()
    else:
        raise ConfigError(f"unknown cost model preset {preset!r}")

    costs = dict(base.cost_per_item)
    by_field = {name: kind for kind, name in COST_FIELDS.items()}
    threshold = base.coverage_threshold
    included: Iterable[TDItemKind] = base.included_items
    clamp = base.clamp_coverage_term
    try:
        for key, value in doc.items():
            if key in by_field:
                costs[by_field[key]] = parse_rational(value)
            elif key in ("expected_coverage", "coverage_threshold"):
                threshold = parse_rational(value)
            elif key == "included_items":
                included = [TDItemKind(v) for v in value]
            elif key == "clamp_coverage_term":
                clamp = bool(value)
            else:
                raise ConfigError(f"unknown cost model key {key!r}")
        return CostModel(costs, threshold, frozenset(included), clamp)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid cost model: {exc}") from None


def estimate_to_dict(est: Estimate) -> dict[str, Any]:
    return {
        "total_person_hours": format_rational(est.total_person_hours),
        "total_display": est.display_total,
        "breakdown": {k: format_rational(v) for k, v in est.breakdown.items()},
        "inputs": {
            "counts": est.counts.to_dict(),
            "project": project_to_dict(est.project),
            "threshold": format_rational(est.threshold),
        },
    }


def estimate_from_dict(data: Mapping[str, Any]) -> Estimate:
    inputs = data["inputs"]
    return Estimate(
        total_person_hours=Fraction(data["total_person_hours"]),
        breakdown={k: Fraction(v) for k, v in data["breakdown"].items()},
        counts=ItemCounts.from_dict(inputs["counts"]),
        project=project_from_dict(inputs["project"]),
        threshold=Fraction(inputs["threshold"]),
    )
