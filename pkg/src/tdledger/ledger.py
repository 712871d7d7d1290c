"""Run snapshots, fingerprint diffs, the CI gate and report rendering."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .archgraph import GraphMetrics, metrics_from_dict, metrics_to_dict
from .costmodel import TERM_NAMES, Estimate, estimate_from_dict, estimate_to_dict
from .errors import ParseError, ProjectMismatchError
from .model import (
    ItemCounts,
    ProjectMeta,
    TDInstance,
    count_by_item,
    format_2dp,
    format_rational,
    instance_from_dict,
    instance_to_dict,
    location_to_dict,
    project_from_dict,
    project_to_dict,
    validate_instance,
)

SNAPSHOT_FORMAT = "tdledger.snapshot/1"
DIFF_FORMAT = "tdledger.diff/1"


@dataclass(frozen=True)
class RunSnapshot:
    project: ProjectMeta
    created_at: dt.datetime
    instances: tuple[TDInstance, ...]
    counts: ItemCounts
    estimate: Estimate
    graph_metrics: GraphMetrics | None = None
    tool_versions: Mapping[str, str] = field(default_factory=dict)


def snapshot_violations(snap: RunSnapshot) -> list[str]:
    problems = []
    for inst in snap.instances:
        problems.extend(f"{inst.id}: {p}" for p in validate_instance(inst, snap.project.slug))
    try:
        if count_by_item(snap.instances) != snap.counts:
            problems.append("counts do not match instances")
    except ValueError as exc:
        problems.append(str(exc))
    if snap.estimate.counts != snap.counts:
        problems.append("estimate counts do not echo snapshot counts")
    if snap.estimate.project != snap.project:
        problems.append("estimate project does not echo snapshot project")
    return problems


def fingerprint(inst: TDInstance) -> str:
    """Stable identity of a finding across runs; line numbers are ignored."""
    payload = json.dumps(
        [inst.td_type_name, inst.item_kind.value, location_to_dict(inst.location.without_line()), inst.source_tool],
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _format_timestamp(ts: dt.datetime) -> str:
    return ts.isoformat()


def parse_timestamp(text: str) -> dt.datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts


def snapshot_to_dict(snap: RunSnapshot) -> dict[str, Any]:
    return {
        "format": SNAPSHOT_FORMAT,
        "project": project_to_dict(snap.project),
        "created_at": _format_timestamp(snap.created_at),
        "instances": [instance_to_dict(i) for i in snap.instances],
        "fingerprints": {i.id: fingerprint(i) for i in snap.instances},
        "counts": snap.counts.to_dict(),
        "estimate": estimate_to_dict(snap.estimate),
        "graph_metrics": metrics_to_dict(snap.graph_metrics) if snap.graph_metrics else None,
        "tool_versions": dict(snap.tool_versions),
    }


def snapshot_from_dict(data: Mapping[str, Any]) -> RunSnapshot:
    graph = data.get("graph_metrics")
    return RunSnapshot(
        project=project_from_dict(data["project"]),
        created_at=parse_timestamp(data["created_at"]),
        instances=tuple(instance_from_dict(i) for i in data["instances"]),
        counts=ItemCounts.from_dict(data["counts"]),
        estimate=estimate_from_dict(data["estimate"]),
        graph_metrics=metrics_from_dict(graph) if graph else None,
        tool_versions={str(k): str(v) for k, v in (data.get("tool_versions") or {}).items()},
    )


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def serialize_snapshot(snap: RunSnapshot) -> str:
    return dump_json(snapshot_to_dict(snap))


def load_snapshot(text: str | bytes, source: str = "snapshot") -> RunSnapshot:
    try:
        data = json.loads(text)
        if not isinstance(data, dict) or data.get("format") != SNAPSHOT_FORMAT:
            raise ParseError(source, f"not a {SNAPSHOT_FORMAT} document")
        return snapshot_from_dict(data)
    except ParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(source, f"malformed JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as exc:
        raise ParseError(source, f"invalid snapshot: {exc!r}") from None


# -- diff and gate ----------------------------------------------------------


@dataclass(frozen=True)
class RunDiff:
    project_slug: str
    introduced: tuple[TDInstance, ...]
    resolved: tuple[TDInstance, ...]
    persisting: tuple[str, ...]
    principal_delta: Fraction


def diff_runs(old: RunSnapshot, new: RunSnapshot) -> RunDiff:
    if old.project.slug != new.project.slug:
        raise ProjectMismatchError(f"cannot diff runs of {old.project.slug!r} and {new.project.slug!r}")
    old_fps = {fingerprint(i) for i in old.instances}
    new_fps = {fingerprint(i) for i in new.instances}
    return RunDiff(
        project_slug=new.project.slug,
        introduced=tuple(i for i in new.instances if fingerprint(i) not in old_fps),
        resolved=tuple(i for i in old.instances if fingerprint(i) not in new_fps),
        persisting=tuple(sorted(old_fps & new_fps)),
        principal_delta=new.estimate.total_person_hours - old.estimate.total_person_hours,
    )


def diff_to_dict(d: RunDiff) -> dict[str, Any]:
    return {
        "format": DIFF_FORMAT,
        "project": d.project_slug,
        "introduced": [instance_to_dict(i) for i in d.introduced],
        "resolved": [instance_to_dict(i) for i in d.resolved],
        "persisting": list(d.persisting),
        "principal_delta": format_rational(d.principal_delta),
    }


def load_diff(text: str | bytes, source: str = "diff") -> RunDiff:
    try:
        data = json.loads(text)
        if not isinstance(data, dict) or data.get("format") != DIFF_FORMAT:
            raise ParseError(source, f"not a {DIFF_FORMAT} document")
        return RunDiff(
            project_slug=data["project"],
            introduced=tuple(instance_from_dict(i) for i in data["introduced"]),
            resolved=tuple(instance_from_dict(i) for i in data["resolved"]),
            persisting=tuple(data["persisting"]),
            principal_delta=Fraction(data["principal_delta"]),
        )
    except ParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(source, f"malformed JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as exc:
        raise ParseError(source, f"invalid diff: {exc!r}") from None


@dataclass(frozen=True)
class GateResult:
    passed: bool
    reasons: tuple[str, ...]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def evaluate_gate(diff: RunDiff, budget: Fraction, fail_on_new: bool = False) -> GateResult:
    budget = Fraction(budget)
    reasons = []
    if diff.principal_delta > budget:
        reasons.append(
            f"principal grew by {format_2dp(diff.principal_delta)} person-hours, "
            f"budget is {format_2dp(budget)}"
        )
    if fail_on_new and diff.introduced:
        ids = ", ".join(i.id for i in diff.introduced)
        reasons.append(f"{len(diff.introduced)} new TD instance(s): {ids}")
    return GateResult(passed=not reasons, reasons=tuple(reasons))


def cmd_gate(diff: RunDiff, budget: Fraction, fail_on_new: bool = False) -> int:
    return evaluate_gate(diff, budget, fail_on_new).exit_code


# -- rendering --------------------------------------------------------------

ROW_LABELS = (
    "ID",
    "TD type name",
    "TD item name",
    "Location",
    "Responsible/Author",
    "Dimension",
    "Date/Time",
    "Context",
    "Propagation",
    "Intentionality",
    "Source tool",
)


def _cell(text: str) -> str:
    text = " ".join(str(text).split())
    return text.replace("|", "\\|") or "-"


def instance_rows(inst: TDInstance) -> list[tuple[str, str]]:
    values = (
        inst.id,
        inst.td_type_name,
        inst.item_kind.label,
        inst.location.describe(),
        ", ".join(inst.responsible),
        inst.dimension.label,
        inst.recorded_at.isoformat(),
        inst.context,
        inst.propagation,
        inst.intentionality.value,
        inst.source_tool,
    )
    return list(zip(ROW_LABELS, values))


def render_markdown(snap: RunSnapshot) -> str:
    p = snap.project
    out = [
        f"# Technical debt ledger: {p.name} (`{p.slug}`)",
        "",
        f"- Run: {_format_timestamp(snap.created_at)}",
        f"- Lines of code: {p.loc}",
        f"- Classes: {p.num_classes}",
        f"- Line coverage: {format_2dp(p.coverage_percent)}%",
        "",
        "## Principal estimate",
        "",
        "| Term | Person-hours |",
        "|---|---:|",
    ]
    for term in TERM_NAMES.values():
        if term not in snap.estimate.breakdown:
            continue
        value = snap.estimate.breakdown[term]
        out.append(f"| {term} | {format_2dp(value)} |")
    out.append(f"| **Total** | **{snap.estimate.display_total}** |")
    out += ["", "## Counts by item", "", "| TD item | Dimension | Count |", "|---|---|---:|"]
    for kind, n in snap.counts.items():
        out.append(f"| {kind.label} | {kind.dimension.label} | {n} |")
    if not snap.counts:
        out.append("| - | - | 0 |")

    if snap.graph_metrics is not None:
        g = snap.graph_metrics
        out += [
            "",
            "## Architecture",
            "",
            f"- Intercomponent cyclicality: {format_2dp(g.cyclicality)}%",
            f"- Stability: {format_2dp(g.stability)}%",
            f"- Rule violations: {len(g.violations)}",
        ]
        for v in g.violations:
            tag = " (outside Can-Use whitelist)" if v.implicit else ""
            edges = ", ".join(f"{s} -> {d}" for s, d, _ in v.offending_edges)
            out.append(f"  - {v.rule.kind.value} {v.rule.from_component} -> {v.rule.to_component}{tag}: {edges}")

    out += ["", "## TD instances", ""]
    if not snap.instances:
        out += ["_No TD instances recorded._", ""]
    for inst in snap.instances:
        out += [f"### {inst.id}", "", "| Field | Value |", "|---|---|"]
        out += [f"| {label} | {_cell(value)} |" for label, value in instance_rows(inst)]
        if inst.repayment_note:
            out += ["", f"Repayment: {_cell(inst.repayment_note)}"]
        out.append("")
    return "\n".join(out)


def render_report(snap: RunSnapshot, fmt: str = "json") -> str:
    fmt = fmt.lower()
    if fmt == "json":
        return serialize_snapshot(snap)
    if fmt in ("md", "markdown"):
        return render_markdown(snap)
    raise ValueError(f"unknown report format {fmt!r}")
