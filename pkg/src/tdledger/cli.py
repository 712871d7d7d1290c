"""Command-line entry point.

Exit codes:
- 0: success / gate passed
- 1: gate failed
- 2: input or parse error
- 3: usage error
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .archgraph import DepGraph, analyze_graph, metrics_to_dict, parse_rules
from .errors import ConfigError, ParseError, ProjectMismatchError, TDLedgerError
from .ingest import parse_depgraph
from .ledger import (
    diff_runs,
    diff_to_dict,
    dump_json,
    evaluate_gate,
    load_diff,
    load_snapshot,
    render_report,
)
from .pipeline import AnalysisError, StoreBusyError, cmd_analyze, list_runs, load_config
from .rank import RankMethod, parse_ratings_csv, rank_ratings, rank_tables_to_dict

EXIT_OK = 0
EXIT_GATE_FAIL = 1
EXIT_INPUT = 2
EXIT_USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(path, f"cannot read file: {exc.strerror}") from None


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    snap, path = cmd_analyze(config)
    print(path)
    print(
        f"{len(snap.instances)} TD instance(s), principal estimate "
        f"{snap.estimate.display_total} person-hours",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_diff(args: argparse.Namespace) -> int:
    old = load_snapshot(_read_bytes(args.old), args.old)
    new = load_snapshot(_read_bytes(args.new), args.new)
    _emit(dump_json(diff_to_dict(diff_runs(old, new))), args.output)
    return EXIT_OK


def _gate_diff(args: argparse.Namespace):
    if args.diff:
        if args.old or args.new:
            raise UsageError("--diff cannot be combined with --old/--new")
        return load_diff(_read_bytes(args.diff), args.diff)
    if args.old or args.new:
        if not (args.old and args.new):
            raise UsageError("--old and --new must be given together")
        old_path, new_path = args.old, args.new
    else:
        runs = list_runs(Path(args.store))
        if len(runs) < 2:
            raise UsageError(f"need two runs in {args.store}/runs to gate, found {len(runs)}")
        old_path, new_path = str(runs[-2]), str(runs[-1])
    old = load_snapshot(_read_bytes(old_path), old_path)
    new = load_snapshot(_read_bytes(new_path), new_path)
    return diff_runs(old, new)


def _cmd_gate(args: argparse.Namespace) -> int:
    try:
        budget = Fraction(args.budget)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--budget must be a number, got {args.budget!r}") from None
    result = evaluate_gate(_gate_diff(args), budget, args.fail_on_new)
    if result.passed:
        print("gate passed")
    else:
        print("gate failed:", file=sys.stderr)
        for reason in result.reasons:
            print(f"  - {reason}", file=sys.stderr)
    return result.exit_code


def _cmd_report(args: argparse.Namespace) -> int:
    snap = load_snapshot(_read_bytes(args.snapshot), args.snapshot)
    _emit(render_report(snap, args.format), args.output)
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    ratings = parse_ratings_csv(_read_bytes(args.ratings), args.ratings)
    method = RankMethod.DENSE if args.dense else RankMethod.COMPETITION
    rows = rank_tables_to_dict(rank_ratings(ratings, method))
    if args.format == "json":
        _emit(dump_json(rows), None)
        return EXIT_OK
    attrs = list(rows[0]["ranks"]) if rows else []
    lines = [
        "| Project | " + " | ".join(f"{a} rank" for a in attrs) + " | Sum | Overall quality rank |",
        "|---|" + "---:|" * (len(attrs) + 2),
    ]
    for r in rows:
        cells = [str(r["ranks"][a]) for a in attrs]
        lines.append(f"| {r['project']} | " + " | ".join(cells) + f" | {r['sum']} | {r['overall_rank']} |")
    _emit("\n".join(lines), None)
    return EXIT_OK


def _cmd_graph(args: argparse.Namespace) -> int:
    graph = DepGraph.from_spec(parse_depgraph(_read_bytes(args.depgraph), args.depgraph))
    rules = parse_rules(_read_bytes(args.rules), args.rules) if args.rules else []
    _emit(dump_json(metrics_to_dict(analyze_graph(graph, rules))), None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdledger", description="Multi-analyzer technical-debt ledger")
    parser.add_argument("-v", "--verbose", action="store_true", help="log unclassified findings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="ingest reports and persist a run snapshot")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("diff", help="compare two run snapshots")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--output", "-o", help="write the diff JSON here instead of stdout")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("gate", help="fail when new debt exceeds a budget")
    p.add_argument("--budget", required=True, help="allowed principal growth in person-hours")
    p.add_argument("--fail-on-new", action="store_true", help="fail on any newly introduced instance")
    p.add_argument("--diff", help="diff JSON produced by 'tdledger diff'")
    p.add_argument("--old", help="baseline snapshot")
    p.add_argument("--new", help="current snapshot")
    p.add_argument("--store", default=".tdledger", help="store to take the two latest runs from")
    p.set_defaults(func=_cmd_gate)

    p = sub.add_parser("report", help="render a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--format", choices=("json", "md"), default="md")
    p.add_argument("--output", "-o")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("rank", help="overall quality rank from per-attribute ratings")
    p.add_argument("--ratings", required=True, help="CSV: project,attribute,rating,effort")
    p.add_argument("--dense", action="store_true", help="dense ranking instead of competition ranking")
    p.add_argument("--format", choices=("json", "md"), default="md")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("graph", help="dependency-graph metrics and rule checks")
    p.add_argument("depgraph")
    p.add_argument("--rules", help="Can-Use/Cannot-Use rules file")
    p.set_defaults(func=_cmd_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"tdledger: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AnalysisError as exc:
        print("tdledger: input errors, no snapshot written:", file=sys.stderr)
        for err in exc.errors:
            print(f"  - {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, ProjectMismatchError, StoreBusyError, TDLedgerError) as exc:
        print(f"tdledger: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
