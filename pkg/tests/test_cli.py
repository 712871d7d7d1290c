from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from filelock import FileLock

from tdledger.cli import main
from tdledger.ledger import load_snapshot, serialize_snapshot
from tdledger.model import TDItemKind

PINNED = "2019-04-15T12:00:00Z"

# Hand-derived from the jws fixture files: which finding lands where, in emission order.
JWS_EXPECTED = [
    ("jws_td_1", "InadequateTestCoverage", "Coverage below 90%"),
    ("jws_td_2", "LackOfTests", "Add some tests to this class"),
    ("jws_cd_1", "CodingGuidelineViolation", "Whitespace around"),
    ("jws_cd_2", "CodeSmell", "Long method"),
    ("jws_dd_1", "DesignSmell", "Unutilized abstraction"),
    ("jws_td_3", "ImproperTestDesign", "Add at least one assertion to this test case"),
    ("jws_ad_1", "ArchitectureSmell", "Intercomponent cyclicality"),
]


def run(argv: list[str]) -> int:
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:  # argparse
        return exc.code


@pytest.fixture
def jws(tmp_path, fixtures_dir, monkeypatch) -> Path:
    target = tmp_path / "jws"
    shutil.copytree(fixtures_dir / "jws", target)
    monkeypatch.setenv("TDLEDGER_NOW", PINNED)
    return target


def analyze(config: Path) -> Path:
    assert run(["analyze", "--config", config]) == 0
    (path,) = sorted((config.parent / ".tdledger" / "runs").glob("*.json"))
    return path


def test_analyze_jws(jws):
    path = analyze(jws / "tdledger.yaml")
    assert path.name == "20190415T120000Z.json"
    snap = load_snapshot(path.read_bytes())
    assert [(i.id, i.item_kind.value, i.td_type_name) for i in snap.instances] == JWS_EXPECTED
    assert snap.estimate.total_person_hours == 181
    assert snap.counts.total == 7
    assert snap.graph_metrics.cyclicality == 40
    assert snap.tool_versions["checkstyle"] == "8.19" and "tdledger" in snap.tool_versions


def test_analyze_is_reproducible(jws, tmp_path):
    first = analyze(jws / "tdledger.yaml").read_bytes()
    other = tmp_path / "again"
    shutil.copytree(jws, other, ignore=shutil.ignore_patterns(".tdledger"))
    assert analyze(other / "tdledger.yaml").read_bytes() == first


def test_rerun_same_second_same_content_overwrites(jws):
    a = analyze(jws / "tdledger.yaml")
    assert run(["analyze", "--config", jws / "tdledger.yaml"]) == 0
    assert [p.name for p in (jws / ".tdledger" / "runs").glob("*.json")] == [a.name]


def write_config(dir: Path, inputs: list[dict], **extra) -> Path:
    doc = {"project": {"name": "Demo", "slug": "demo", "loc": 1000, "num_classes": 3}, "inputs": inputs, **extra}
    path = dir / "tdledger.yaml"
    path.write_text(json.dumps(doc))  # JSON is valid YAML
    return path


def test_clean_project(tmp_path, monkeypatch):
    monkeypatch.setenv("TDLEDGER_NOW", PINNED)
    (tmp_path / "cs.xml").write_text('<checkstyle version="8"/>')
    (tmp_path / "cov.xml").write_text('<report name="r"><counter type="LINE" missed="0" covered="10"/></report>')
    config = write_config(tmp_path, [{"format": "checkstyle", "path": "cs.xml"}, {"format": "jacoco", "path": "cov.xml"}])
    snap = load_snapshot(analyze(config).read_bytes())
    assert snap.instances == ()
    assert snap.estimate.total_person_hours == 0


def test_malformed_xml_writes_nothing(jws, capsys):
    (jws / "checkstyle-result.xml").write_text("<checkstyle><file name='x'>")
    assert run(["analyze", "--config", jws / "tdledger.yaml"]) == 2
    assert not (jws / ".tdledger" / "runs").exists() or not list((jws / ".tdledger" / "runs").iterdir())
    err = capsys.readouterr().err
    assert "checkstyle-result.xml" in err and "line" in err


def test_empty_inputs_is_usage_error(tmp_path):
    assert run(["analyze", "--config", write_config(tmp_path, [])]) == 3


def test_missing_config_is_usage_error(tmp_path):
    assert run(["analyze", "--config", tmp_path / "nope.yaml"]) == 3


def test_bad_arguments_exit_3():
    assert run([]) == 3
    assert run(["gate"]) == 3
    assert run(["report", "x.json", "--format", "html"]) == 3


def test_busy_store(jws):
    store = jws / ".tdledger"
    store.mkdir()
    with FileLock(str(store / ".lock")):
        assert run(["analyze", "--config", jws / "tdledger.yaml"]) == 2


class TestDiffAndGate:
    def two_runs(self, jws, monkeypatch):
        old = analyze(jws / "tdledger.yaml")
        csv = jws / "designite.csv"
        csv.write_text(csv.read_text() + "jws,org.java_websocket,Draft_6455,translateFrame,Long Method\n")
        monkeypatch.setenv("TDLEDGER_NOW", "2019-04-16T12:00:00Z")
        assert run(["analyze", "--config", jws / "tdledger.yaml"]) == 0
        new = jws / ".tdledger" / "runs" / "20190416T120000Z.json"
        return old, new

    def test_identity_diff(self, jws, tmp_path):
        snap = analyze(jws / "tdledger.yaml")
        out = tmp_path / "d.json"
        assert run(["diff", snap, snap, "-o", out]) == 0
        doc = json.loads(out.read_text())
        assert doc["introduced"] == [] and doc["resolved"] == [] and doc["principal_delta"] == "0"
        assert run(["gate", "--budget", "0", "--fail-on-new", "--diff", out]) == 0

    def test_new_smell_fails_gate(self, jws, monkeypatch, tmp_path, capsys):
        old, new = self.two_runs(jws, monkeypatch)
        out = tmp_path / "d.json"
        assert run(["diff", old, new, "-o", out]) == 0
        doc = json.loads(out.read_text())
        assert doc["principal_delta"] == "5"
        assert [i["td_item_name"] for i in doc["introduced"]] == ["CodeSmell"]
        assert run(["gate", "--budget", "0", "--old", old, "--new", new]) == 1
        assert run(["gate", "--budget", "8", "--old", old, "--new", new]) == 0
        capsys.readouterr()
        assert run(["gate", "--budget", "8", "--fail-on-new", "--store", jws / ".tdledger"]) == 1
        assert "jws_cd_3" in capsys.readouterr().err

    def test_gate_usage(self, jws, tmp_path):
        assert run(["gate", "--budget", "x", "--store", tmp_path]) == 3
        assert run(["gate", "--budget", "0", "--store", tmp_path]) == 3
        assert run(["gate", "--budget", "0", "--old", "a.json"]) == 3

    def test_missing_snapshot_is_input_error(self, tmp_path):
        assert run(["diff", tmp_path / "a.json", tmp_path / "b.json"]) == 2

    def test_project_mismatch(self, jws, tmp_path):
        snap = load_snapshot(analyze(jws / "tdledger.yaml").read_bytes())
        from dataclasses import replace
        other = replace(snap, project=replace(snap.project, slug="other"))
        (tmp_path / "o.json").write_text(serialize_snapshot(other))
        assert run(["diff", jws / ".tdledger" / "runs" / "20190415T120000Z.json", tmp_path / "o.json"]) == 2


def test_report(jws, capsys):
    snap = analyze(jws / "tdledger.yaml")
    capsys.readouterr()
    assert run(["report", snap]) == 0
    md = capsys.readouterr().out
    assert "| TD type name | Whitespace around |" in md
    assert "**181.00**" in md
    assert run(["report", snap, "--format", "json"]) == 0
    assert capsys.readouterr().out == snap.read_text()


def test_rank(tmp_path, capsys):
    rows = ["project,attribute,rating,effort"]
    ranks_by_project = {"JWS": (1, 1, 1, 4), "JDBM3": (3, 2, 2, 1), "Jedis": (2, 3, 3, 3), "MyBatis": (3, 4, 4, 2)}
    for project, ranks in ranks_by_project.items():
        for attr, r in zip(("Reliability", "Maintainability", "Security", "Stability"), ranks):
            rows.append(f"{project},{attr},{100 - r},0")  # score: higher is better
    path = tmp_path / "r.csv"
    path.write_text("\n".join(rows) + "\n")
    assert run(["rank", "--ratings", path, "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert [(r["project"], r["sum"], r["overall_rank"]) for r in out] == [
        ("JWS", 7, 1), ("JDBM3", 8, 2), ("Jedis", 11, 3), ("MyBatis", 13, 4)]
    assert run(["rank", "--ratings", path]) == 0
    assert "| JWS | 1 | 1 | 1 | 4 | 7 | 1 |" in capsys.readouterr().out


def test_graph(fixtures_dir, capsys):
    mybatis = fixtures_dir / "mybatis"
    assert run(["graph", mybatis / "deps.txt", "--rules", mybatis / "rules.txt"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["cyclicality"] == "0"
    assert len(doc["violations"]) == 1
    assert run(["graph", mybatis / "missing.txt"]) == 2


def test_verbose_logs_unclassified(jws, caplog):
    import logging
    caplog.set_level(logging.INFO)
    assert run(["-v", "analyze", "--config", jws / "tdledger.yaml"]) == 0
    assert "FinalParameters" in caplog.text


def test_item_kinds_in_snapshot_are_known(jws):
    doc = json.loads(analyze(jws / "tdledger.yaml").read_text())
    assert {i["td_item_name"] for i in doc["instances"]} <= {k.value for k in TDItemKind}
