"""Run configuration and the analyze pipeline.

A run reads every configured report, turns findings into TD instances,
counts and prices them, optionally analyzes a dependency graph, and
persists the result as a snapshot under ``<store>/runs/``.
"""

from __future__ import annotations

import datetime as dt
import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml
from filelock import FileLock, Timeout

from . import __version__
from .archgraph import ArchRule, DepGraph, GraphMetrics, analyze_graph, parse_rules
from .classify import (
    DEFAULT_COVERAGE_THRESHOLD,
    OrdinalMinter,
    Ruleset,
    classify_findings,
    default_ruleset,
    derive_coverage_findings,
    load_ruleset,
)
from .costmodel import CostModel, cost_model_from_mapping, estimate_principal
from .errors import ConfigError, ParseError, TDLedgerError
from .ingest import (
    CoverageSummary,
    RawFinding,
    parse_checkstyle_report,
    parse_depgraph,
    parse_designite_csv,
    parse_jacoco_report,
    parse_native_findings,
)
from .ledger import RunSnapshot, parse_timestamp, serialize_snapshot, snapshot_violations
from .model import (
    Location,
    ProjectMeta,
    Scope,
    TDDimension,
    TDInstance,
    TDItemKind,
    count_by_item,
    format_2dp,
    mint_instance_id,
    parse_rational,
)

log = logging.getLogger(__name__)

NOW_ENV = "TDLEDGER_NOW"
FORMATS = ("checkstyle", "jacoco", "designite", "native", "depgraph")


class AnalysisError(TDLedgerError):
    """One or more inputs could not be read; nothing was written."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class InputSpec:
    format: str
    path: Path
    rules: Path | None = None  # architecture rules, depgraph inputs only


@dataclass(frozen=True)
class RunConfig:
    project: ProjectMeta
    inputs: tuple[InputSpec, ...]
    cost_model: CostModel = field(default_factory=CostModel)
    coverage_threshold: Fraction = DEFAULT_COVERAGE_THRESHOLD
    ruleset: Ruleset = field(default_factory=default_ruleset)
    store: Path = Path(".tdledger")
    tool_versions: Mapping[str, str] = field(default_factory=dict)


def _project_from_config(doc: Any) -> ProjectMeta:
    if not isinstance(doc, Mapping):
        raise ConfigError("config needs a 'project' mapping")
    try:
        return ProjectMeta(
            name=str(doc["name"]),
            slug=str(doc["slug"]),
            loc=int(doc.get("loc", 0)),
            num_classes=int(doc.get("num_classes", 0)),
            coverage_percent=parse_rational(doc.get("coverage_percent", 100)),
        )
    except KeyError as exc:
        raise ConfigError(f"project is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid project: {exc}") from None


def load_config(path: str | Path) -> RunConfig:
    """Read a YAML (or JSON) run configuration; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"unreadable config {path}: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError(f"config {path} must be a mapping")
    base = path.parent

    inputs = []
    for i, entry in enumerate(doc.get("inputs") or []):
        if not isinstance(entry, Mapping) or "path" not in entry or "format" not in entry:
            raise ConfigError(f"input #{i + 1} needs 'format' and 'path'")
        fmt = str(entry["format"]).lower()
        if fmt not in FORMATS:
            raise ConfigError(f"input #{i + 1}: unknown format {fmt!r} (expected one of {', '.join(FORMATS)})")
        rules = entry.get("rules")
        inputs.append(InputSpec(fmt, base / str(entry["path"]), base / str(rules) if rules else None))

    try:
        threshold = parse_rational(doc.get("coverage_threshold", DEFAULT_COVERAGE_THRESHOLD))
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid coverage_threshold: {exc}") from None
    if not 0 <= threshold <= 100:
        raise ConfigError(f"coverage_threshold out of [0,100]: {threshold}")
    cost_doc = dict(doc.get("cost_model") or {})
    cost_doc.setdefault("expected_coverage", threshold)
    cost_model = cost_model_from_mapping(cost_doc)

    ruleset = default_ruleset()
    if doc.get("ruleset"):
        rules_path = base / str(doc["ruleset"])
        try:
            ruleset = load_ruleset(rules_path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read ruleset {rules_path}: {exc.strerror}") from None

    return RunConfig(
        project=_project_from_config(doc.get("project")),
        inputs=tuple(inputs),
        cost_model=cost_model,
        coverage_threshold=threshold,
        ruleset=ruleset,
        store=base / str(doc.get("store", ".tdledger")),
        tool_versions={str(k): str(v) for k, v in (doc.get("tool_versions") or {}).items()},
    )


def now() -> dt.datetime:
    """Current time, or the pinned ``TDLEDGER_NOW`` value."""
    pinned = os.environ.get(NOW_ENV)
    if pinned:
        try:
            return parse_timestamp(pinned)
        except ValueError:
            raise ConfigError(f"{NOW_ENV} is not an ISO-8601 timestamp: {pinned!r}") from None
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0)


@dataclass
class _Inputs:
    findings: list[RawFinding] = field(default_factory=list)
    coverage: list[CoverageSummary] = field(default_factory=list)
    graphs: list[tuple[DepGraph, list[ArchRule]]] = field(default_factory=list)


def _read(path: Path, source: str) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ParseError(source, f"cannot read file: {exc.strerror}") from None


def _read_inputs(config: RunConfig) -> _Inputs:
    got = _Inputs()
    errors: list[ParseError] = []
    for spec in config.inputs:
        source = str(spec.path)
        try:
            raw = _read(spec.path, source)
            if spec.format == "checkstyle":
                parsed = parse_checkstyle_report(raw, source)
            elif spec.format == "designite":
                parsed = parse_designite_csv(raw, source)
            elif spec.format == "native":
                parsed = parse_native_findings(raw, source)
            elif spec.format == "jacoco":
                cov = parse_jacoco_report(raw, source)
                got.coverage.append(cov)
                for err in cov.errors:
                    log.warning("skipped record: %s", err)
                continue
            else:
                graph = DepGraph.from_spec(parse_depgraph(raw, source))
                rules = parse_rules(_read(spec.rules, str(spec.rules)), str(spec.rules)) if spec.rules else []
                got.graphs.append((graph, rules))
                continue
        except ParseError as exc:
            errors.append(exc)
            continue
        for err in parsed.errors:
            log.warning("skipped record: %s", err)
        got.findings.extend(parsed.findings)
    if errors:
        raise AnalysisError(errors)
    if len(got.coverage) > 1:
        raise ConfigError("at most one jacoco input per run")
    if len(got.graphs) > 1:
        raise ConfigError("at most one depgraph input per run")
    return got


def architecture_instances(
    metrics: GraphMetrics, project: ProjectMeta, minter: OrdinalMinter, day: dt.date
) -> list[TDInstance]:
    """One smell for intercomponent cycles, one rule-violation instance per violated rule."""
    arch = TDDimension.ARCHITECTURE
    out = []
    if metrics.cyclicality > 0:
        packages = sorted({c for cycle in metrics.cyclic_components for c in cycle})
        out.append(
            TDInstance(
                id=mint_instance_id(project.slug, arch, minter.take(arch)),
                td_type_name="Intercomponent cyclicality",
                item_kind=TDItemKind.ARCHITECTURE_SMELL,
                location=Location(scope=Scope.CROSS_PACKAGE, package=", ".join(packages)),
                responsible=(),
                dimension=arch,
                recorded_at=day,
                context=f"{format_2dp(metrics.cyclicality)}% of atoms sit in cross-component cycles",
                source_tool="depgraph",
            )
        )
    for v in metrics.violations:
        kind = "Can-Use whitelist" if v.implicit else "Cannot-Use rule"
        out.append(
            TDInstance(
                id=mint_instance_id(project.slug, arch, minter.take(arch)),
                td_type_name=f"{kind} violation {v.rule.from_component} -> {v.rule.to_component}",
                item_kind=TDItemKind.ARCHITECTURE_RULE_VIOLATION,
                location=Location(
                    scope=Scope.CROSS_PACKAGE, package=f"{v.rule.from_component}, {v.rule.to_component}"
                ),
                responsible=(),
                dimension=arch,
                recorded_at=day,
                context=f"{len(v.offending_edges)} offending dependency edge(s)",
                source_tool="depgraph",
            )
        )
    return out


def run_analysis(config: RunConfig, created_at: dt.datetime | None = None) -> RunSnapshot:
    """Build a snapshot from the configured inputs without touching the store."""
    if not config.inputs:
        raise ConfigError("no input reports configured")
    created_at = created_at or now()
    day = created_at.date()
    inputs = _read_inputs(config)

    project = config.project
    if inputs.coverage:
        project = replace(project, coverage_percent=inputs.coverage[0].project_coverage)

    minter = OrdinalMinter()
    instances: list[TDInstance] = []
    for cov in inputs.coverage:
        instances += derive_coverage_findings(cov, config.coverage_threshold, project, day, minter)
    classified = classify_findings(inputs.findings, config.ruleset, project, minter, day)
    instances += classified.instances
    for item in classified.unclassified:
        log.info("unclassified finding %s:%s", item.finding.source_tool, item.finding.rule_id)
    if classified.unclassified:
        log.warning("%d finding(s) matched no classification rule", len(classified.unclassified))

    metrics = None
    for graph, rules in inputs.graphs:
        metrics = analyze_graph(graph, rules)
        instances += architecture_instances(metrics, project, minter, day)

    counts = count_by_item(instances)
    snap = RunSnapshot(
        project=project,
        created_at=created_at,
        instances=tuple(instances),
        counts=counts,
        estimate=estimate_principal(counts, project, config.cost_model),
        graph_metrics=metrics,
        tool_versions={"tdledger": __version__, **config.tool_versions},
    )
    problems = snapshot_violations(snap)
    if problems:
        raise TDLedgerError("inconsistent snapshot: " + "; ".join(problems))
    return snap


def snapshot_filename(created_at: dt.datetime) -> str:
    return created_at.astimezone(dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ") + ".json"


def write_snapshot(snap: RunSnapshot, store: Path) -> Path:
    """Persist under ``<store>/runs``; a same-second clash with different content gets a suffix."""
    runs = store / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    text = serialize_snapshot(snap)
    target = runs / snapshot_filename(snap.created_at)
    n = 1
    while target.exists() and target.read_text(encoding="utf-8") != text:
        target = runs / f"{snapshot_filename(snap.created_at)[:-5]}-{n}.json"
        n += 1
    tmp = target.with_suffix(".json.tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(target)
    return target


class StoreBusyError(TDLedgerError):
    pass


def cmd_analyze(config: RunConfig, created_at: dt.datetime | None = None) -> tuple[RunSnapshot, Path]:
    snap = run_analysis(config, created_at)
    config.store.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(config.store / ".lock"))
    try:
        with lock.acquire(timeout=0):
            return snap, write_snapshot(snap, config.store)
    except Timeout:
        raise StoreBusyError(f"another analyze holds the lock on {config.store}") from None


def list_runs(store: Path) -> list[Path]:
    runs = store / "runs"
    if not runs.is_dir():
        return []
    def order(p: Path) -> tuple[str, int]:
        stamp, _, n = p.stem.partition("-")
        return stamp, int(n) if n.isdigit() else 0

    return sorted(runs.glob("*.json"), key=order)
