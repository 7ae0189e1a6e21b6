"""Per-project selection state and the classification-to-level mapping.

A selection marks which catalog sections and controls a project requires.
The maps store only explicit marks: setting a flag to false removes the
mark, mirroring the Y-or-blank cells of the spreadsheet this replaces.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field, replace

from .catalog import (
    CSV_HEADER,
    REQUIRED_COLUMN,
    AssuranceLevel,
    ControlCatalog,
    ControlId,
    lookup,
    parse_catalog_csv,
)
from .errors import MissingHeader, SchemaViolation, UnknownControl, UnknownSection

# The only tokens that count as "required"; matched exactly, no trimming.
REQUIRED_TOKENS = ("Y", "y", "YES", "yes", "Yes")


class Classification(enum.IntEnum):
    """UK government security classifications, lowest to highest."""

    OFFICIAL = 1
    OFFICIAL_SENSITIVE = 2
    SECRET = 3
    TOP_SECRET = 4

    @classmethod
    def from_label(cls, label: str) -> "Classification":
        normalized = label.strip().upper().replace(" ", "_").replace("-", "_")
        try:
            return cls[normalized]
        except KeyError:
            raise ValueError(f"unknown classification {label!r}") from None


def level_for_classification(classification: Classification) -> AssuranceLevel:
    """Map a classification to the assurance level it calls for.

    OFFICIAL maps to L1 and OFFICIAL_SENSITIVE to L2; some sources treat
    plain OFFICIAL as eligible for L2 as well, so callers may override
    the level explicitly where a stronger stance is wanted.
    """
    if classification is Classification.OFFICIAL:
        return AssuranceLevel.L1
    if classification is Classification.OFFICIAL_SENSITIVE:
        return AssuranceLevel.L2
    return AssuranceLevel.L3


def parse_required_token(token: str, warnings: list[str] | None = None) -> bool:
    """True iff the token is one of the five accepted "required" spellings.

    Every other token, including the empty string, is false. When a
    warnings list is supplied (strict mode), a non-empty unrecognized
    token is also reported there.
    """
    if token in REQUIRED_TOKENS:
        return True
    if warnings is not None and token != "":
        warnings.append(f"unrecognized required token {token!r} treated as not required")
    return False


@dataclass(frozen=True)
class OrphanControlSelection:
    """A control marked required whose section is not; excluded with this warning."""

    control_id: ControlId

    def __str__(self) -> str:
        return (f"control {self.control_id} is marked required but its section is not; "
                f"it is excluded from the selection")


@dataclass
class SelectionState:
    project_id: str
    sections: dict[str, bool] = field(default_factory=dict)
    controls: dict[ControlId, bool] = field(default_factory=dict)
    catalog: ControlCatalog | None = field(default=None, repr=False, compare=False)


def new_selection(project_id: str, catalog: ControlCatalog | None = None) -> SelectionState:
    return SelectionState(project_id=project_id, catalog=catalog)


def _bound_catalog(state: SelectionState) -> ControlCatalog:
    if state.catalog is None:
        raise ValueError("selection state is not bound to a catalog")
    return state.catalog


def set_section_required(state: SelectionState, section_key: str, flag: bool) -> SelectionState:
    """Record (or clear) a section mark; unknown keys are rejected."""
    catalog = _bound_catalog(state)
    if catalog.section_by_key(section_key) is None:
        raise UnknownSection(section_key)
    sections = dict(state.sections)
    if flag:
        sections[section_key] = True
    else:
        sections.pop(section_key, None)
    return replace(state, sections=sections)


def set_control_required(state: SelectionState, control_id: ControlId, flag: bool) -> SelectionState:
    catalog = _bound_catalog(state)
    if lookup(catalog, control_id) is None:
        raise UnknownControl(str(control_id))
    controls = dict(state.controls)
    if flag:
        controls[control_id] = True
    else:
        controls.pop(control_id, None)
    return replace(state, controls=controls)


def reset_selection(state: SelectionState) -> SelectionState:
    """Zero all marks; the project id (and binding) are preserved."""
    return replace(state, sections={}, controls={})


def effective_selection(
    catalog: ControlCatalog, state: SelectionState
) -> tuple[list[ControlId], list[OrphanControlSelection]]:
    """Controls that are required AND whose section is required, in catalog order.

    A control marked without its section is excluded and reported as an
    ``OrphanControlSelection`` warning instead of silently dropped.
    """
    required_sections = {key for key, on in state.sections.items() if on}
    required_controls = {cid for cid, on in state.controls.items() if on}
    selected: list[ControlId] = []
    warnings: list[OrphanControlSelection] = []
    for section in catalog.sections:
        section_on = section.key in required_sections
        for control in section.controls:
            if control.id not in required_controls:
                continue
            if section_on:
                selected.append(control.id)
            else:
                warnings.append(OrphanControlSelection(control.id))
    return selected, warnings


def serialize_selection(state: SelectionState) -> str:
    payload = {
        "project_id": state.project_id,
        "sections": {key: True for key in sorted(k for k, on in state.sections.items() if on)},
        "controls": {str(cid): True for cid in sorted(c for c, on in state.controls.items() if on)},
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def deserialize_selection(text: str, catalog: ControlCatalog) -> SelectionState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "document must be an object")
    project_id = doc.get("project_id")
    if not isinstance(project_id, str):
        raise SchemaViolation("$.project_id", "must be a string")
    raw_sections = doc.get("sections", {})
    raw_controls = doc.get("controls", {})
    if not isinstance(raw_sections, dict):
        raise SchemaViolation("$.sections", "must be an object")
    if not isinstance(raw_controls, dict):
        raise SchemaViolation("$.controls", "must be an object")

    state = new_selection(project_id, catalog)
    for key, value in raw_sections.items():
        if not isinstance(value, bool):
            raise SchemaViolation(f"$.sections.{key}", "must be a boolean")
        state = set_section_required(state, key, value)
    for cid_text, value in raw_controls.items():
        if not isinstance(value, bool):
            raise SchemaViolation(f"$.controls.{cid_text}", "must be a boolean")
        try:
            cid = ControlId.parse(cid_text)
        except ValueError as exc:
            raise SchemaViolation(f"$.controls.{cid_text}", str(exc)) from None
        state = set_control_required(state, cid, value)
    return state


def selection_from_csv(
    text: str, project_id: str, catalog: ControlCatalog, strict: bool = True
) -> tuple[SelectionState, list[str]]:
    """Import section and control marks from a catalog sheet with a trailing
    Required column, honoring the same token semantics as the wizard."""
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff"), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("document is empty") from None
    if tuple(header) != CSV_HEADER + (REQUIRED_COLUMN,):
        raise MissingHeader(
            f"expected header {','.join(CSV_HEADER + (REQUIRED_COLUMN,))}, got {','.join(header)}"
        )
    parse_catalog_csv(text)  # reject malformed sheets before reading any marks

    warnings: list[str] = []
    token_sink = warnings if strict else None
    state = new_selection(project_id, catalog)
    section_titles = {section.title: section.key for section in catalog.sections}
    for row in reader:
        if not row:
            continue
        req_cell, control_cell, category, detail = row[0], row[1], row[2], row[3]
        required_cell = row[7]
        is_section_row = (
            req_cell == "" and control_cell == "" and detail == ""
            and all(c == "" for c in row[4:7]) and category != ""
        )
        if is_section_row:
            if parse_required_token(required_cell, token_sink):
                key = section_titles.get(category.strip())
                if key is None:
                    raise UnknownSection(category.strip())
                state = set_section_required(state, key, True)
            continue
        if control_cell and parse_required_token(required_cell, token_sink):
            cid = ControlId.parse(control_cell)
            state = set_control_required(state, cid, True)
    return state, warnings
