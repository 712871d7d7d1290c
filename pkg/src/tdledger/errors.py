"""Exception hierarchy shared by every tdledger module."""

from __future__ import annotations


class TDLedgerError(Exception):
    """Base class for all errors raised by tdledger."""


class InvalidSlugError(TDLedgerError, ValueError):
    pass


class DuplicateIdError(TDLedgerError, ValueError):
    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"duplicate TD instance ids: {', '.join(ids)}")


class ParseError(TDLedgerError):
    """File-level failure: the whole input is unusable.

    ``location`` is a human-readable pointer into the input: a byte offset,
    a line number, or a JSON path, depending on the format.
    """

    def __init__(self, source: str, message: str, location: str | None = None):
        self.source = source
        self.message = message
        self.location = location
        where = f" at {location}" if location else ""
        super().__init__(f"{source}{where}: {message}")


class RecordError(TDLedgerError):
    """A single bad record inside an otherwise readable file."""

    def __init__(self, source: str, message: str, location: str | None = None):
        self.source = source
        self.message = message
        self.location = location
        where = f" at {location}" if location else ""
        super().__init__(f"{source}{where}: {message}")


class ClassificationError(TDLedgerError):
    def __init__(self, source_tool: str, rule_id: str):
        self.source_tool = source_tool
        self.rule_id = rule_id
        super().__init__(f"no classification rule matches {source_tool}:{rule_id}")


class MissingCostError(TDLedgerError, KeyError):
    def __init__(self, kind: object):
        self.kind = kind
        super().__init__(f"no cost configured for counted item kind {kind}")

    def __str__(self) -> str:
        return self.args[0]


class RankInputError(TDLedgerError, ValueError):
    pass


class IncompleteMatrixError(RankInputError):
    def __init__(self, project: str, attribute: str):
        self.project = project
        self.attribute = attribute
        super().__init__(f"missing rank for project {project!r} under attribute {attribute!r}")


class DegenerateInputError(TDLedgerError, ValueError):
    pass


class ProjectMismatchError(TDLedgerError, ValueError):
    pass


class ConfigError(TDLedgerError):
    """Bad or incomplete run configuration (a usage problem, not a parse one)."""
