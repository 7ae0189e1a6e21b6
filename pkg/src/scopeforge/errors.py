"""Exception types shared across the package.

Parsers and mutators raise; validators and selection queries report
problems as return values instead (see ``catalog.Violation`` and
``selection.OrphanControlSelection``).
"""

from __future__ import annotations


class ScopeforgeError(Exception):
    """Base class for all domain errors raised by this package."""


# --- catalog parsing ---------------------------------------------------------

class CatalogError(ScopeforgeError):
    """A document could not be parsed into a valid control catalog."""


class MissingHeader(CatalogError):
    """The CSV document does not start with the expected header row."""


class MalformedRow(CatalogError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateControlId(CatalogError):
    def __init__(self, control_id: str):
        self.control_id = control_id
        super().__init__(f"duplicate control id {control_id}")


class NonMonotonicReq(CatalogError):
    def __init__(self, req: int, previous: int):
        self.req = req
        self.previous = previous
        super().__init__(f"req ordinal {req} does not increase past {previous}")


class EmptyDetail(CatalogError):
    def __init__(self, control_id: str):
        self.control_id = control_id
        super().__init__(f"control {control_id} has empty detail text")


class UnknownLevelToken(CatalogError):
    def __init__(self, cell: str, line: int | None = None):
        self.cell = cell
        self.line = line
        where = f" on line {line}" if line is not None else ""
        super().__init__(f"unknown level cell token {cell!r}{where}")


class ControlBeforeAnySection(CatalogError):
    def __init__(self, line: int):
        self.line = line
        super().__init__(f"line {line}: control row appears before any section header")


class SchemaViolation(ScopeforgeError):
    """A JSON document does not conform to its schema."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


# --- selection ---------------------------------------------------------------

class UnknownSection(ScopeforgeError):
    def __init__(self, section_key: str):
        self.section_key = section_key
        super().__init__(f"section {section_key!r} is not in the catalog")


class UnknownControl(ScopeforgeError):
    def __init__(self, control_id: str):
        self.control_id = control_id
        super().__init__(f"control {control_id} is not in the catalog")


# --- scope generation --------------------------------------------------------

class EmptyMeta(ScopeforgeError):
    def __init__(self, field_name: str):
        self.field_name = field_name
        super().__init__(f"project metadata field {field_name!r} must not be blank")


class UnsupportedFormat(ScopeforgeError):
    def __init__(self, fmt: str):
        self.format = fmt
        super().__init__(f"unsupported output format {fmt!r}")


class IoError(ScopeforgeError):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


# --- tracking ----------------------------------------------------------------

class ControlNotInScope(ScopeforgeError):
    def __init__(self, control_id: str, sprint_ref: str):
        self.control_id = control_id
        self.sprint_ref = sprint_ref
        super().__init__(f"control {control_id} is not in the scope of sprint {sprint_ref!r}")


class FailWithoutFinding(ScopeforgeError):
    def __init__(self, control_id: str):
        self.control_id = control_id
        super().__init__(f"a fail result for {control_id} requires at least one finding")


class UnknownFinding(ScopeforgeError):
    def __init__(self, finding_id: str):
        self.finding_id = finding_id
        super().__init__(f"no finding with id {finding_id!r}")


class AlreadyMitigated(ScopeforgeError):
    def __init__(self, finding_id: str):
        self.finding_id = finding_id
        super().__init__(f"finding {finding_id!r} is already mitigated")


class DuplicateFinding(ScopeforgeError):
    def __init__(self, finding_id: str):
        self.finding_id = finding_id
        super().__init__(f"finding id {finding_id!r} already recorded")


class UnknownSprint(ScopeforgeError):
    def __init__(self, sprint_ref: str):
        self.sprint_ref = sprint_ref
        super().__init__(f"no scope registered for sprint {sprint_ref!r}")


# --- workspace / CLI ---------------------------------------------------------

class AlreadyInitialized(ScopeforgeError):
    def __init__(self, root: str):
        self.root = root
        super().__init__(f"workspace already initialized at {root}")


class NotInitialized(ScopeforgeError):
    def __init__(self, root: str):
        self.root = root
        super().__init__(f"no workspace at {root} (run `scopeforge init` first)")
