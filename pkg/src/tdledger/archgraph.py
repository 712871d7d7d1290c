"""Dependency-graph analysis over class-level atoms grouped into components.

An edge ``a -> b`` means atom ``a`` depends on (uses) atom ``b``.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

from .errors import DegenerateInputError, ParseError
from .ingest import DepGraphSpec, _as_text
from .model import format_2dp, format_rational

log = logging.getLogger(__name__)


class DepGraph:
    """Immutable directed graph; parallel edges are merged by summing weights."""

    def __init__(self, atoms: Iterable[tuple[str, str]], edges: Iterable[tuple[str, str, int]] = ()):
        self.components: dict[str, str] = {}
        for atom_id, component in atoms:
            if atom_id in self.components:
                raise ValueError(f"duplicate atom {atom_id!r}")
            if not component:
                raise ValueError(f"atom {atom_id!r} has an empty component")
            self.components[atom_id] = component
        self.adjacency: dict[str, dict[str, int]] = {a: {} for a in self.components}
        for src, dst, weight in edges:
            if src not in self.components or dst not in self.components:
                raise ValueError(f"dangling edge {src!r} -> {dst!r}")
            if weight < 1:
                raise ValueError(f"edge weight must be positive: {src!r} -> {dst!r}")
            self.adjacency[src][dst] = self.adjacency[src].get(dst, 0) + weight

    @classmethod
    def from_spec(cls, spec: DepGraphSpec) -> DepGraph:
        return cls(spec.atoms, spec.edges)

    @property
    def atoms(self) -> list[str]:
        return list(self.components)

    def edges(self) -> Iterator[tuple[str, str, int]]:
        for src, targets in self.adjacency.items():
            for dst, weight in targets.items():
                yield src, dst, weight

    def subgraph(self, keep: set[str]) -> DepGraph:
        return DepGraph(
            [(a, c) for a, c in self.components.items() if a in keep],
            [(s, d, w) for s, d, w in self.edges() if s in keep and d in keep],
        )

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class SCC:
    atoms: frozenset[str]
    cyclic: bool  # size >= 2, or a single atom with a self-loop


def strongly_connected_components(g: DepGraph) -> list[SCC]:
    """Iterative Tarjan. SCCs come out in reverse topological order (sinks first)."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    result: list[SCC] = []
    counter = 0

    for root in g.components:
        if root in index:
            continue
        work: list[tuple[str, Iterator[str]]] = [(root, iter(g.adjacency[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, successors = work[-1]
            advanced = False
            for succ in successors:
                if succ not in index:
                    index[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(g.adjacency[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                members = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    members.append(top)
                    if top == node:
                        break
                cyclic = len(members) > 1 or node in g.adjacency[node]
                result.append(SCC(frozenset(members), cyclic))
    return result


def intercomponent_cycles(g: DepGraph) -> list[SCC]:
    """SCCs of two or more atoms whose atoms live in at least two components."""
    return [
        scc
        for scc in strongly_connected_components(g)
        if len(scc.atoms) >= 2 and len({g.components[a] for a in scc.atoms}) >= 2
    ]


def intercomponent_cyclicality(g: DepGraph) -> Fraction:
    """Percentage of atoms that sit in a cycle spanning several components."""
    if not len(g):
        raise DegenerateInputError("cyclicality of an empty graph is undefined")
    cyclic = sum(len(scc.atoms) for scc in intercomponent_cycles(g))
    return Fraction(100 * cyclic, len(g))


def _reachability_sum(g: DepGraph) -> int:
    """Sum over atoms of |atoms reachable from it, itself included|."""
    sccs = strongly_connected_components(g)
    owner = {a: i for i, scc in enumerate(sccs) for a in scc.atoms}
    bit = {a: 1 << i for i, a in enumerate(g.components)}
    reach: list[int] = []
    total = 0
    # sinks first, so every successor SCC is already resolved
    for i, scc in enumerate(sccs):
        bits = 0
        for a in scc.atoms:
            bits |= bit[a]
            for succ in g.adjacency[a]:
                j = owner[succ]
                if j != i:
                    bits |= reach[j]
        reach.append(bits)
        total += len(scc.atoms) * bin(bits).count("1")
    return total


def stability(g: DepGraph, scope: str | Iterable[str] | None = None) -> Fraction:
    """100 when no atom is affected by changes in another, 0 when every atom is.

    For N atoms, each atom ``a`` impacts itself plus every atom that
    transitively depends on it; the excess over N is normalized by N(N-1).
    ``scope`` restricts the analysis to the subgraph of the named component(s).
    """
    if scope is not None:
        wanted = {scope} if isinstance(scope, str) else set(scope)
        g = g.subgraph({a for a, c in g.components.items() if c in wanted})
    n = len(g)
    if n == 0:
        raise DegenerateInputError("stability scope contains no atoms")
    if n == 1:
        return Fraction(100)
    excess = _reachability_sum(g) - n
    return 100 * (1 - Fraction(excess, n * (n - 1)))


class RuleKind(str, Enum):
    CANNOT_USE = "CannotUse"
    CAN_USE = "CanUse"


@dataclass(frozen=True)
class ArchRule:
    kind: RuleKind
    from_component: str
    to_component: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.kind is RuleKind.CANNOT_USE and self.from_component == self.to_component:
            raise ValueError(f"Cannot-Use rule from a component to itself: {self.from_component!r}")


@dataclass(frozen=True)
class RuleViolation:
    rule: ArchRule
    offending_edges: tuple[tuple[str, str, int], ...]
    implicit: bool = False  # breach of a Can-Use whitelist rather than a stated rule


def check_rules(g: DepGraph, rules: Iterable[ArchRule]) -> list[RuleViolation]:
    """Cannot-Use rules forbid edges outright. Can-Use rules whitelist.

    Once a component has any Can-Use rule, its dependencies on components
    outside that whitelist (other than itself) are violations too.
    """
    rules = list(rules)
    known = set(g.components.values())
    for rule in rules:
        for comp in (rule.from_component, rule.to_component):
            if comp not in known:
                log.warning("rule %s %s -> %s names unknown component %r",
                            rule.kind.value, rule.from_component, rule.to_component, comp)

    crossing: dict[tuple[str, str], list[tuple[str, str, int]]] = {}
    for src, dst, w in g.edges():
        key = (g.components[src], g.components[dst])
        crossing.setdefault(key, []).append((src, dst, w))

    violations = []
    forbidden: set[tuple[str, str]] = set()
    for rule in rules:
        if rule.kind is not RuleKind.CANNOT_USE:
            continue
        pair = (rule.from_component, rule.to_component)
        forbidden.add(pair)
        edges = crossing.get(pair)
        if edges:
            violations.append(RuleViolation(rule, tuple(sorted(edges))))

    allowed: dict[str, set[str]] = {}
    for rule in rules:
        if rule.kind is RuleKind.CAN_USE:
            allowed.setdefault(rule.from_component, set()).add(rule.to_component)
    for (src_comp, dst_comp), edges in sorted(crossing.items()):
        if src_comp not in allowed or src_comp == dst_comp:
            continue
        if dst_comp in allowed[src_comp] or (src_comp, dst_comp) in forbidden:
            continue
        violations.append(
            RuleViolation(ArchRule(RuleKind.CANNOT_USE, src_comp, dst_comp), tuple(sorted(edges)), implicit=True)
        )
    return violations


_RULE_WORDS = {
    "cannot-use": RuleKind.CANNOT_USE,
    "cannotuse": RuleKind.CANNOT_USE,
    "can-use": RuleKind.CAN_USE,
    "canuse": RuleKind.CAN_USE,
}


def parse_rules(data: bytes | str, source: str = "rules") -> list[ArchRule]:
    """One rule per line: ``cannot-use <from> <to>`` or ``can-use <from> <to>``."""
    text = _as_text(data, source)
    rules = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = re.findall(r"\S+", raw.split("#", 1)[0])
        if not tokens:
            continue
        kind = _RULE_WORDS.get(tokens[0].lower())
        if kind is None or len(tokens) != 3:
            raise ParseError(source, "expected 'cannot-use|can-use <from> <to>'", f"line {line_no}")
        try:
            rules.append(ArchRule(kind, tokens[1], tokens[2]))
        except ValueError as exc:
            raise ParseError(source, str(exc), f"line {line_no}") from None
    return rules


def violation_to_dict(v: RuleViolation) -> dict[str, Any]:
    return {
        "rule": {"kind": v.rule.kind.value, "from": v.rule.from_component, "to": v.rule.to_component},
        "implicit": v.implicit,
        "edges": [{"from": s, "to": d, "weight": w} for s, d, w in v.offending_edges],
    }


def violation_from_dict(data: Mapping[str, Any]) -> RuleViolation:
    rule = data["rule"]
    return RuleViolation(
        ArchRule(RuleKind(rule["kind"]), rule["from"], rule["to"]),
        tuple((e["from"], e["to"], int(e["weight"])) for e in data["edges"]),
        bool(data.get("implicit", False)),
    )


@dataclass(frozen=True)
class GraphMetrics:
    cyclicality: Fraction
    stability: Fraction
    violations: tuple[RuleViolation, ...]
    cyclic_components: tuple[tuple[str, ...], ...] = ()  # component names per intercomponent cycle


def analyze_graph(g: DepGraph, rules: Iterable[ArchRule] = ()) -> GraphMetrics:
    cycles = intercomponent_cycles(g)
    return GraphMetrics(
        cyclicality=intercomponent_cyclicality(g),
        stability=stability(g),
        violations=tuple(check_rules(g, rules)),
        cyclic_components=tuple(
            sorted(tuple(sorted({g.components[a] for a in scc.atoms})) for scc in cycles)
        ),
    )


def metrics_to_dict(m: GraphMetrics) -> dict[str, Any]:
    return {
        "cyclicality": format_rational(m.cyclicality),
        "cyclicality_display": format_2dp(m.cyclicality),
        "stability": format_rational(m.stability),
        "stability_display": format_2dp(m.stability),
        "violations": [violation_to_dict(v) for v in m.violations],
        "cyclic_components": [list(c) for c in m.cyclic_components],
    }


def metrics_from_dict(data: Mapping[str, Any]) -> GraphMetrics:
    return GraphMetrics(
        cyclicality=Fraction(data["cyclicality"]),
        stability=Fraction(data["stability"]),
        violations=tuple(violation_from_dict(v) for v in data.get("violations", [])),
        cyclic_components=tuple(tuple(c) for c in data.get("cyclic_components", [])),
    )
