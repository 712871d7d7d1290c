"""Parsers for analyzer report files.

Every parser takes the raw file content (``bytes`` or ``str``) and either
returns a value or raises :class:`~tdledger.errors.ParseError`. Problems
confined to one record (a bad ``<error>`` element, a ragged CSV row) are
collected as :class:`~tdledger.errors.RecordError` and parsing continues.
"""

from __future__ import annotations

import csv
import io
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import PurePosixPath
from typing import Any

from .errors import ParseError, RecordError
from .model import Location, Scope, location_from_dict, location_to_dict, location_violations


@dataclass(frozen=True)
class RawFinding:
    source_tool: str
    rule_id: str
    message: str
    location: Location
    author: str | None = None


@dataclass
class ParsedFindings:
    findings: list[RawFinding] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)


@dataclass(frozen=True)
class CoverageSummary:
    project_coverage: Fraction
    per_class: dict[str, Fraction] = field(default_factory=dict)
    errors: tuple[RecordError, ...] = ()


@dataclass(frozen=True)
class DepGraphSpec:
    atoms: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str, int], ...]


class UnknownAtomError(ParseError):
    pass


class DuplicateAtomError(ParseError):
    pass


def _as_bytes(data: bytes | str) -> bytes:
    return data.encode("utf-8") if isinstance(data, str) else bytes(data)


def _as_text(data: bytes | str, source: str) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(source, f"not valid UTF-8 ({exc.reason})", f"byte offset {exc.start}") from None


def _byte_offset(raw: bytes, line: int, column: int) -> int:
    offset = 0
    for _ in range(max(line - 1, 0)):
        nl = raw.find(b"\n", offset)
        if nl < 0:
            break
        offset = nl + 1
    return offset + column


def _parse_xml(data: bytes | str, source: str) -> ET.Element:
    raw = _as_bytes(data)
    try:
        return ET.fromstring(raw)
    except ET.ParseError as exc:
        line, column = exc.position
        where = f"line {line}, column {column} (byte offset {_byte_offset(raw, line, column)})"
        raise ParseError(source, f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}", where) from None
    except LookupError as exc:  # unknown encoding in the XML declaration
        raise ParseError(source, f"unreadable XML: {exc}", "line 1 (XML declaration)") from None
    except (ValueError, RecursionError) as exc:
        raise ParseError(source, f"unreadable XML: {exc}") from None


_JAVA_ROOTS = ("src/main/java/", "src/test/java/", "src/main/", "src/test/", "src/")


def java_coordinates(path: str) -> tuple[str | None, str | None]:
    """Guess ``(package, class)`` from a Java source path."""
    posix = path.replace("\\", "/")
    p = PurePosixPath(posix)
    class_name = p.stem or None
    package = None
    for root in _JAVA_ROOTS:
        idx = posix.rfind(root)
        if idx >= 0:
            rel = PurePosixPath(posix[idx + len(root):]).parent
            if str(rel) not in ("", "."):
                package = ".".join(rel.parts)
            break
    return package, class_name


def _checkstyle_rule_id(source_attr: str) -> str:
    last = source_attr.rsplit(".", 1)[-1]
    if last.endswith("Check") and len(last) > len("Check"):
        last = last[: -len("Check")]
    return last


def parse_checkstyle_report(data: bytes | str, source: str = "checkstyle") -> ParsedFindings:
    """Read a checker-report XML (``<checkstyle><file><error/></file></checkstyle>``)."""
    root = _parse_xml(data, source)
    if root.tag != "checkstyle":
        raise ParseError(source, f"expected <checkstyle> root element, found <{root.tag}>")

    result = ParsedFindings()
    for f_idx, file_el in enumerate(root.iter("file")):
        file_name = file_el.get("name")
        errors = file_el.findall("error")
        if not file_name:
            if errors:
                result.errors.append(RecordError(source, "<file> without name attribute", f"file #{f_idx + 1}"))
            continue
        package, class_name = java_coordinates(file_name)
        for e_idx, err in enumerate(errors):
            where = f"{file_name}, error #{e_idx + 1}"
            missing = [a for a in ("line", "source") if not err.get(a)]
            if missing:
                result.errors.append(RecordError(source, f"missing attribute(s): {', '.join(missing)}", where))
                continue
            try:
                line = int(err.get("line", ""))
            except ValueError:
                line = 0
            if line < 1:
                result.errors.append(RecordError(source, f"invalid line {err.get('line')!r}", where))
                continue
            rule_id = _checkstyle_rule_id(err.get("source", ""))
            if not rule_id:
                result.errors.append(RecordError(source, "empty rule id in source attribute", where))
                continue
            result.findings.append(
                RawFinding(
                    source_tool="checkstyle",
                    rule_id=rule_id,
                    message=err.get("message", ""),
                    location=Location(
                        scope=Scope.LINE,
                        file_path=file_name,
                        package=package,
                        class_name=class_name,
                        line=line,
                    ),
                )
            )
    return result


def _line_counter(el: ET.Element) -> tuple[int, int] | None:
    """Return ``(covered, missed)`` from the direct LINE counter child, if any."""
    for counter in el.findall("counter"):
        if counter.get("type") == "LINE":
            covered = int(counter.get("covered", ""))
            missed = int(counter.get("missed", ""))
            if covered < 0 or missed < 0:
                raise ValueError("negative counter value")
            return covered, missed
    return None


def parse_jacoco_report(data: bytes | str, source: str = "jacoco") -> CoverageSummary:
    """Line coverage at report level and per class, as exact percentages."""
    root = _parse_xml(data, source)
    if root.tag != "report":
        raise ParseError(source, f"expected <report> root element, found <{root.tag}>")
    try:
        totals = _line_counter(root)
    except ValueError as exc:
        raise ParseError(source, f"bad report-level LINE counter: {exc}", "/report/counter") from None
    if totals is None:
        raise ParseError(source, "report has no report-level LINE counter", "/report")
    covered, missed = totals
    if covered + missed == 0:
        raise ParseError(source, "degenerate report: zero total lines", "/report/counter[@type='LINE']")

    per_class: dict[str, Fraction] = {}
    errors: list[RecordError] = []
    for pkg in root.findall("package"):
        for cls in pkg.findall("class"):
            name = (cls.get("name") or "").replace("/", ".")
            where = f"class {name or '?'} in package {pkg.get('name', '?')}"
            if not name:
                errors.append(RecordError(source, "<class> without name attribute", where))
                continue
            try:
                counts = _line_counter(cls)
            except ValueError as exc:
                errors.append(RecordError(source, f"bad LINE counter: {exc}", where))
                continue
            if counts is None or sum(counts) == 0:
                continue
            c, m = counts
            per_class[name] = Fraction(100 * c, c + m)
    return CoverageSummary(
        project_coverage=Fraction(100 * covered, covered + missed),
        per_class=per_class,
        errors=tuple(errors),
    )


_CSV_COLUMNS = {
    "project": ("project", "project name"),
    "package": ("package", "package name"),
    "type": ("type", "type name", "class", "class name"),
    "smell": ("smell", "code smell", "design smell", "implementation smell"),
    "method": ("method", "method name"),
}


def parse_designite_csv(data: bytes | str, source: str = "designite") -> ParsedFindings:
    """Read a smell table with columns Project, Package, Type, Smell and optional Method."""
    text = _as_text(data, source)
    result = ParsedFindings()
    try:
        reader = csv.reader(io.StringIO(text, newline=""))
        header = next(reader, None)
        if header is None:
            raise ParseError(source, "empty file: header row required", "line 1")
        normalized = [h.strip().lower() for h in header]
        index: dict[str, int] = {}
        for key, aliases in _CSV_COLUMNS.items():
            for alias in aliases:
                if alias in normalized:
                    index[key] = normalized.index(alias)
                    break
        for required in ("project", "package", "type", "smell"):
            if required not in index:
                raise ParseError(source, f"missing required column {required.capitalize()!r}", "line 1")

        for row in reader:
            line_no = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                result.errors.append(
                    RecordError(source, f"ragged row: {len(row)} fields, header has {len(header)}", f"line {line_no}")
                )
                continue
            smell = row[index["smell"]].strip()
            if not smell:
                result.errors.append(RecordError(source, "empty Smell cell", f"line {line_no}"))
                continue
            method = row[index["method"]].strip() if "method" in index else ""
            result.findings.append(
                RawFinding(
                    source_tool="designite",
                    rule_id=smell,
                    message=f"{smell} detected in {row[index['type']].strip()}",
                    location=Location(
                        scope=Scope.METHOD if method else Scope.CLASS,
                        package=row[index["package"]].strip() or None,
                        class_name=row[index["type"]].strip() or None,
                        method_name=method or None,
                    ),
                )
            )
    except csv.Error as exc:
        raise ParseError(source, f"malformed CSV: {exc}", f"line {reader.line_num}") from None
    return result


def finding_to_dict(f: RawFinding) -> dict[str, Any]:
    return {
        "source_tool": f.source_tool,
        "rule_id": f.rule_id,
        "message": f.message,
        "location": location_to_dict(f.location),
        "author": f.author,
    }


def serialize_findings(findings: list[RawFinding]) -> str:
    return json.dumps([finding_to_dict(f) for f in findings], indent=2, sort_keys=True)


_LOCATION_FIELDS = {
    "file_path": str,
    "package": str,
    "class_name": str,
    "method_name": str,
    "line": int,
}


def _require_str(obj: dict, key: str, path: str, source: str, *, optional: bool = False) -> str | None:
    if key not in obj or obj[key] is None:
        if optional:
            return None
        raise ParseError(source, f"missing required field {key!r}", f"{path}/{key}")
    value = obj[key]
    if not isinstance(value, str):
        raise ParseError(source, f"field {key!r} must be a string", f"{path}/{key}")
    return value


def _finding_from_json(obj: Any, path: str, source: str) -> RawFinding:
    if not isinstance(obj, dict):
        raise ParseError(source, "finding must be an object", path)
    tool = _require_str(obj, "source_tool", path, source)
    rule_id = _require_str(obj, "rule_id", path, source)
    if not rule_id:
        raise ParseError(source, "rule_id must be non-empty", f"{path}/rule_id")
    message = _require_str(obj, "message", path, source, optional=True) or ""
    author = _require_str(obj, "author", path, source, optional=True)

    loc = obj.get("location")
    loc_path = f"{path}/location"
    if not isinstance(loc, dict):
        raise ParseError(source, "location must be an object", loc_path)
    if loc.get("scope") not in {s.value for s in Scope}:
        raise ParseError(source, f"unknown scope {loc.get('scope')!r}", f"{loc_path}/scope")
    for key, typ in _LOCATION_FIELDS.items():
        value = loc.get(key)
        if value is not None and (not isinstance(value, typ) or isinstance(value, bool)):
            raise ParseError(source, f"{key} must be {typ.__name__} or null", f"{loc_path}/{key}")
    location = location_from_dict(loc)
    problems = location_violations(location)
    if problems:
        raise ParseError(source, "; ".join(problems), loc_path)
    return RawFinding(source_tool=tool, rule_id=rule_id, message=message, location=location, author=author)


def parse_native_findings(data: bytes | str, source: str = "native") -> ParsedFindings:
    """Read the native findings JSON, the inverse of :func:`serialize_findings`."""
    text = _as_text(data, source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(source, f"malformed JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from None
    except RecursionError:
        raise ParseError(source, "JSON nested too deeply") from None
    except ValueError as exc:
        raise ParseError(source, f"unreadable JSON: {exc}") from None
    if not isinstance(doc, list):
        raise ParseError(source, "top-level value must be an array", "/")
    return ParsedFindings(findings=[_finding_from_json(obj, f"/{i}", source) for i, obj in enumerate(doc)])


_TOKEN_RE = re.compile(r"\S+")


def parse_depgraph(data: bytes | str, source: str = "depgraph") -> DepGraphSpec:
    """Read the line-oriented graph format.

    ``atom <id> <component>`` declares a node, ``edge <from> <to> [weight]``
    a dependency of ``from`` on ``to``. ``#`` starts a comment.
    """
    text = _as_text(data, source)
    atoms: dict[str, str] = {}
    atom_lines: dict[str, int] = {}
    edges: list[tuple[str, str, int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = _TOKEN_RE.findall(line)
        if not tokens:
            continue
        directive, args = tokens[0], tokens[1:]
        where = f"line {line_no}"
        if directive == "atom":
            if len(args) != 2:
                raise ParseError(source, "expected 'atom <id> <component>'", where)
            atom_id, component = args
            if atom_id in atoms:
                raise DuplicateAtomError(
                    source, f"duplicate atom {atom_id!r} (first declared on line {atom_lines[atom_id]})", where
                )
            atoms[atom_id] = component
            atom_lines[atom_id] = line_no
        elif directive == "edge":
            if len(args) not in (2, 3):
                raise ParseError(source, "expected 'edge <from> <to> [weight]'", where)
            weight = 1
            if len(args) == 3:
                if not args[2].isdigit() or int(args[2]) < 1:
                    raise ParseError(source, f"weight must be a positive integer, got {args[2]!r}", where)
                weight = int(args[2])
            edges.append((args[0], args[1], weight, line_no))
        else:
            raise ParseError(source, f"unknown directive {directive!r}", where)

    for src, dst, _, line_no in edges:
        for end in (src, dst):
            if end not in atoms:
                raise UnknownAtomError(source, f"edge references undeclared atom {end!r}", f"line {line_no}")
    return DepGraphSpec(
        atoms=tuple(atoms.items()),
        edges=tuple((s, d, w) for s, d, w, _ in edges),
    )
