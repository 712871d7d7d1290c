from __future__ import annotations

import datetime as dt
from fractions import Fraction
from pathlib import Path

import pytest

from tdledger.model import (
    Intentionality,
    Location,
    ProjectMeta,
    Scope,
    TDInstance,
    TDItemKind,
    dimension_of,
)

FIXTURES = Path(__file__).parent / "fixtures"
DAY = dt.date(2019, 4, 15)


def make_instance(
    id: str,
    kind: TDItemKind,
    type_name: str = "Some type",
    location: Location | None = None,
    **kw,
) -> TDInstance:
    return TDInstance(
        id=id,
        td_type_name=type_name,
        item_kind=kind,
        location=location or Location(scope=Scope.CLASS, package="p", class_name=id.replace("_", "")),
        responsible=kw.pop("responsible", ()),
        dimension=kw.pop("dimension", dimension_of(kind)),
        recorded_at=kw.pop("recorded_at", DAY),
        **kw,
    )


def jws_table6() -> TDInstance:
    """Long method in WebSocketImpl.decodeHandshake, all ten fields filled."""
    return TDInstance(
        id="jws_cd_1",
        td_type_name="Long method",
        item_kind=TDItemKind.CODE_SMELL,
        location=Location(
            scope=Scope.METHOD,
            package="org.java_websocket",
            class_name="WebSocketImpl",
            method_name="decodeHandshake",
        ),
        responsible=("Davidiusdadi",),
        dimension=dimension_of(TDItemKind.CODE_SMELL),
        recorded_at=DAY,
        context="A private method in a Java concrete class.",
        propagation="Impacts other public methods in the same class that uses this method.",
        intentionality=Intentionality.UNINTENTIONAL,
        source_tool="designite",
    )


def jws_instances() -> list[TDInstance]:
    """All seven Java WebSocket instances (the coverage entry included)."""
    K = TDItemKind
    return [
        jws_table6(),
        make_instance(
            "jws_cd_2",
            K.CODING_GUIDELINE_VIOLATION,
            "Whitespace around",
            Location(
                Scope.LINE,
                file_path="src/main/java/org/java_websocket/AbstractWebSocket.java",
                package="org.java_websocket",
                class_name="AbstractWebSocket",
                line=193,
            ),
            responsible=("marci4",),
        ),
        make_instance("jws_td_1", K.INADEQUATE_TEST_COVERAGE, "Coverage below 90%", Location(Scope.PROJECT),
                      responsible=("marci4", "Marcel P")),
        make_instance(
            "jws_td_2",
            K.IMPROPER_TEST_DESIGN,
            "Add at least one assertion to this case",
            Location(Scope.LINE, file_path="Issue256Test.java", class_name="Issue256Test", line=151),
        ),
        make_instance("jws_td_3", K.LACK_OF_TESTS, "Add some tests to this class",
                      Location(Scope.CLASS, package="org.java_websocket.example", class_name="AutobahnClientTest")),
        make_instance("jws_dd_1", K.DESIGN_SMELL, "Unutilized abstraction",
                      Location(Scope.CLASS, package="org.java_websocket", class_name="SSLSocketChannel")),
        make_instance("jws_ad_1", K.ARCHITECTURE_SMELL, "Intercomponent cyclicality",
                      Location(Scope.CROSS_PACKAGE, package="org.java_websocket, org.java_websocket.drafts")),
    ]


def project(slug: str = "jws", loc: int = 5000, coverage: str = "64.2") -> ProjectMeta:
    return ProjectMeta(name=slug.upper(), slug=slug, loc=loc, num_classes=10, coverage_percent=Fraction(coverage))


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
