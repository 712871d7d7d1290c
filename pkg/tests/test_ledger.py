from __future__ import annotations

import datetime as dt
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import jws_instances, jws_table6, make_instance, project
from tdledger.costmodel import default_cost_model, estimate_principal
from tdledger.errors import ParseError, ProjectMismatchError
from tdledger.ledger import (
    ROW_LABELS,
    RunSnapshot,
    cmd_gate,
    diff_runs,
    diff_to_dict,
    dump_json,
    evaluate_gate,
    fingerprint,
    load_diff,
    load_snapshot,
    parse_timestamp,
    render_markdown,
    render_report,
    serialize_snapshot,
    snapshot_violations,
)
from tdledger.model import Location, Scope, TDItemKind, count_by_item

K = TDItemKind
WHEN = dt.datetime(2019, 4, 15, 12, 0, tzinfo=dt.timezone.utc)


def snapshot(instances, meta=None) -> RunSnapshot:
    meta = meta or project()
    counts = count_by_item(instances)
    return RunSnapshot(meta, WHEN, tuple(instances), counts, estimate_principal(counts, meta, default_cost_model()),
                       tool_versions={"checkstyle": "8.19"})


def test_jws_snapshot_is_consistent():
    snap = snapshot(jws_instances())
    assert snapshot_violations(snap) == []
    assert snap.estimate.total_person_hours == 181


def test_snapshot_round_trip():
    snap = snapshot(jws_instances())
    text = serialize_snapshot(snap)
    assert load_snapshot(text) == snap
    assert serialize_snapshot(load_snapshot(text)) == text


@pytest.mark.parametrize("text", ["", "[]", '{"format": "other"}', '{"format": "tdledger.snapshot/1"}', "{"])
def test_load_snapshot_errors(text):
    with pytest.raises(ParseError):
        load_snapshot(text)


def test_timestamps():
    assert parse_timestamp("2019-04-15T12:00:00Z") == WHEN
    assert parse_timestamp("2019-04-15T12:00:00") == WHEN


def test_fingerprint_ignores_line():
    a = jws_instances()[1]
    moved = replace(a, location=replace(a.location, line=a.location.line + 10), id="jws_cd_9")
    assert fingerprint(a) == fingerprint(moved)
    other = replace(a, location=replace(a.location, class_name="Other"))
    assert fingerprint(a) != fingerprint(other)


class TestDiff:
    def test_identity(self):
        snap = snapshot(jws_instances())
        d = diff_runs(snap, snap)
        assert d.introduced == () and d.resolved == ()
        assert d.principal_delta == 0
        assert len(d.persisting) == 7

    def test_new_code_smell(self):
        old = snapshot(jws_instances())
        extra = make_instance("jws_cd_3", K.CODE_SMELL, "Long parameter list")
        d = diff_runs(old, snapshot(jws_instances() + [extra]))
        assert [i.id for i in d.introduced] == ["jws_cd_3"]
        assert d.principal_delta == 5

    def test_line_move_persists(self):
        xs = jws_instances()
        moved = replace(xs[1], location=replace(xs[1].location, line=203))
        d = diff_runs(snapshot(xs), snapshot([xs[0], moved, *xs[2:]]))
        assert d.introduced == () and d.resolved == ()

    def test_project_mismatch(self):
        with pytest.raises(ProjectMismatchError):
            diff_runs(snapshot([]), snapshot([], project("other")))

    def test_diff_round_trip(self):
        d = diff_runs(snapshot(jws_instances()[:3]), snapshot(jws_instances()[2:]))
        assert load_diff(dump_json(diff_to_dict(d))) == d

    @given(st.sets(st.integers(0, 6)), st.sets(st.integers(0, 6)))
    def test_inverse_consistent(self, a, b):
        xs = jws_instances()
        old = snapshot([xs[i] for i in sorted(a)])
        new = snapshot([xs[i] for i in sorted(b)])
        forward, backward = diff_runs(old, new), diff_runs(new, old)
        assert forward.introduced == backward.resolved
        assert forward.resolved == backward.introduced
        assert forward.principal_delta == -backward.principal_delta
        fps = lambda xs: {fingerprint(i) for i in xs}  # noqa: E731
        assert not fps(forward.introduced) & fps(forward.resolved)


class TestGate:
    def diff(self, extra: int):
        old = snapshot(jws_instances())
        more = [make_instance(f"jws_cd_{3 + i}", K.CODE_SMELL, f"Smell {i}") for i in range(extra)]
        return diff_runs(old, snapshot(jws_instances() + more))

    def test_clean_pass(self):
        assert cmd_gate(self.diff(0), Fraction(0), fail_on_new=True) == 0

    def test_over_budget(self):
        result = evaluate_gate(self.diff(1), Fraction(0))
        assert result.exit_code == 1
        assert "5.00" in result.reasons[0]

    def test_within_budget(self):
        assert cmd_gate(self.diff(1), Fraction(8), fail_on_new=False) == 0

    def test_fail_on_new_lists_ids(self):
        result = evaluate_gate(self.diff(2), Fraction(100), fail_on_new=True)
        assert not result.passed
        assert "jws_cd_3, jws_cd_4" in result.reasons[0]

    def test_resolution_passes(self):
        old = snapshot(jws_instances())
        d = diff_runs(old, snapshot(jws_instances()[1:]))
        assert d.principal_delta == -5  # one code smell gone
        assert cmd_gate(d, Fraction(0), fail_on_new=True) == 0


class TestRender:
    def test_table6_rows(self):
        md = render_markdown(snapshot([jws_table6()]))
        assert "| TD type name | Long method |" in md
        assert "| Intentionality | Unintentional |" in md
        assert "| TD item name | Code smells |" in md
        assert "| Dimension | Code debt |" in md

    def test_row_labels(self):
        md = render_markdown(snapshot([jws_table6()]))
        body = md.split("### jws_cd_1", 1)[1]
        rows = [line.split("|")[1].strip() for line in body.splitlines() if line.startswith("| ")][1:]
        assert tuple(rows) == ROW_LABELS
        assert len(ROW_LABELS) == 11

    def test_empty(self):
        md = render_markdown(snapshot([], project(coverage="100")))
        assert md.startswith("# Technical debt ledger")
        assert "_No TD instances recorded._" in md

    def test_deterministic(self):
        snap = snapshot(jws_instances())
        for fmt in ("json", "md"):
            assert render_report(snap, fmt) == render_report(snap, fmt)
        assert render_report(load_snapshot(serialize_snapshot(snap)), "md") == render_report(snap, "md")

    def test_pipes_escaped(self):
        inst = make_instance("jws_cd_1", K.CODE_SMELL, "a|b",
                             location=Location(Scope.CLASS, package="p", class_name="C"), repayment_note="fix it")
        md = render_markdown(snapshot([inst]))
        assert "a\\|b" in md
        assert "Repayment: fix it" in md

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render_report(snapshot([]), "html")
