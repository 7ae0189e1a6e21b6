"""Control catalogs: parse, validate, serialize, and query.

A catalog is an ordered list of sections, each holding verification
controls with per-level applicability marks. The CSV wire format mirrors
the spreadsheet sheet it replaces: a fixed header row, section-title rows
with only the Category cell populated, and one row per control with `x`
marks in the level columns. JSON is the canonical persistence format.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Literal

from .errors import (
    ControlBeforeAnySection,
    DuplicateControlId,
    EmptyDetail,
    MalformedRow,
    MissingHeader,
    NonMonotonicReq,
    SchemaViolation,
    UnknownLevelToken,
)

CSV_HEADER = ("Req", "Control", "Category", "Detail", "Level 1", "Level 2", "Level 3")
REQUIRED_COLUMN = "Required"

# "V1: Architecture, design and threat modelling" -> key "V1"
_CATEGORY_KEY_RE = re.compile(r"^\s*([A-Za-z]+[0-9]+)\s*:")


class AssuranceLevel(enum.IntEnum):
    """The three cumulative assurance levels, ordered L1 < L2 < L3."""

    L1 = 1
    L2 = 2
    L3 = 3

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_name(cls, name: str) -> "AssuranceLevel":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown assurance level {name!r}") from None


@dataclass(frozen=True, order=True)
class ControlId:
    """A control identifier such as 1.2: section number, then item number."""

    section_number: int
    item_number: int

    def __post_init__(self) -> None:
        if self.section_number < 1 or self.item_number < 1:
            raise ValueError(f"control id parts must be >= 1, got {self.section_number}.{self.item_number}")

    def __str__(self) -> str:
        return f"{self.section_number}.{self.item_number}"

    @classmethod
    def parse(cls, text: str) -> "ControlId":
        parts = text.split(".")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ValueError(f"control id must look like '1.2', got {text!r}")
        return cls(int(parts[0]), int(parts[1]))


@dataclass(frozen=True)
class Control:
    req: int
    id: ControlId
    category: str
    detail: str
    levels: frozenset[AssuranceLevel]


@dataclass(frozen=True)
class Section:
    key: str
    title: str
    controls: tuple[Control, ...]


@dataclass(frozen=True)
class ControlCatalog:
    sections: tuple[Section, ...]

    @cached_property
    def _by_id(self) -> dict[ControlId, Control]:
        return {c.id: c for c in self.iter_controls()}

    def iter_controls(self) -> Iterator[Control]:
        for section in self.sections:
            yield from section.controls

    def section_by_key(self, key: str) -> Section | None:
        for section in self.sections:
            if section.key == key:
                return section
        return None

    @property
    def control_count(self) -> int:
        return sum(len(s.controls) for s in self.sections)


@dataclass(frozen=True)
class Violation:
    """One validation finding; severity is 'error' or 'warning'."""

    kind: str
    severity: str
    subject: str
    message: str


def section_key_from_category(category: str) -> str | None:
    """Return the 'V1'-style key prefix of a category cell, if present."""
    match = _CATEGORY_KEY_RE.match(category)
    return match.group(1) if match else None


def _parse_level_cells(cells: list[str], line: int) -> frozenset[AssuranceLevel]:
    levels = set()
    for level, cell in zip(AssuranceLevel, cells):
        if cell == "":
            continue
        if cell in ("x", "X"):
            levels.add(level)
        else:
            raise UnknownLevelToken(cell, line)
    return frozenset(levels)


def parse_catalog_csv(text: str) -> ControlCatalog:
    """Parse the CSV wire format into a catalog.

    The header must be exactly the seven catalog columns; a trailing
    ``Required`` column is tolerated (and ignored) so that exported test
    scopes and selection sheets re-parse as catalogs. A UTF-8 BOM is
    stripped; spreadsheet exports commonly carry one.
    """
    reader = csv.reader(io.StringIO(text.lstrip("\ufeff"), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("document is empty") from None
    if tuple(header) != CSV_HEADER and tuple(header) != CSV_HEADER + (REQUIRED_COLUMN,):
        raise MissingHeader(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    width = len(header)

    sections: list[tuple[str, list[Control], int]] = []
    seen_ids: set[ControlId] = set()
    last_req = 0
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != width:
            raise MalformedRow(line, f"expected {width} cells, got {len(row)}")
        req_cell, control_cell, category, detail = row[0], row[1], row[2], row[3]
        level_cells = row[4:7]

        is_section_row = (
            req_cell == "" and control_cell == "" and detail == ""
            and all(c == "" for c in level_cells) and category != ""
        )
        if is_section_row:
            sections.append((category.strip(), [], line))
            continue

        if not sections:
            raise ControlBeforeAnySection(line)
        try:
            req = int(req_cell)
        except ValueError:
            raise MalformedRow(line, f"req cell {req_cell!r} is not an integer") from None
        if req < 1:
            raise MalformedRow(line, f"req ordinal must be >= 1, got {req}")
        try:
            control_id = ControlId.parse(control_cell)
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None

        if control_id in seen_ids:
            raise DuplicateControlId(str(control_id))
        seen_ids.add(control_id)
        if req <= last_req:
            raise NonMonotonicReq(req, last_req)
        last_req = req
        if not detail.strip():
            raise EmptyDetail(str(control_id))
        levels = _parse_level_cells(level_cells, line)
        if not levels:
            raise MalformedRow(line, f"control {control_id} has no level marks")

        current = sections[-1][1]
        if current:
            prev = current[-1]
            if control_id.section_number != prev.id.section_number:
                raise MalformedRow(
                    line,
                    f"control {control_id} does not belong to the same section as {prev.id}",
                )
            if not control_id > prev.id:
                raise MalformedRow(line, f"control {control_id} is out of order after {prev.id}")
        current.append(Control(req=req, id=control_id, category=category, detail=detail, levels=levels))

    built: list[Section] = []
    used_keys: set[str] = set()
    for index, (title, controls, header_line) in enumerate(sections, start=1):
        key = None
        if controls:
            key = section_key_from_category(controls[0].category)
        if key is None:
            key = f"S{index}"
        if key in used_keys:
            raise MalformedRow(header_line, f"duplicate section key {key!r}")
        used_keys.add(key)
        built.append(Section(key=key, title=title, controls=tuple(controls)))
    return ControlCatalog(sections=tuple(built))


def serialize_catalog_csv(catalog: ControlCatalog) -> str:
    """Canonical CSV writer: RFC-4180 minimal quoting, LF line endings."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for section in catalog.sections:
        writer.writerow(["", "", section.title, "", "", "", ""])
        for control in section.controls:
            marks = ["x" if level in control.levels else "" for level in AssuranceLevel]
            writer.writerow([control.req, str(control.id), control.category, control.detail, *marks])
    return out.getvalue()


def serialize_catalog_json(catalog: ControlCatalog) -> str:
    payload = {
        "sections": [
            {
                "key": section.key,
                "title": section.title,
                "controls": [
                    {
                        "req": control.req,
                        "id": str(control.id),
                        "category": control.category,
                        "detail": control.detail,
                        "levels": [str(level) for level in sorted(control.levels)],
                    }
                    for control in section.controls
                ],
            }
            for section in catalog.sections
        ]
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _expect(condition: bool, path: str, reason: str) -> None:
    if not condition:
        raise SchemaViolation(path, reason)


def parse_catalog_json(text: str) -> ControlCatalog:
    """Parse the canonical JSON format; inverse of ``serialize_catalog_json``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from None
    _expect(isinstance(doc, dict), "$", "document must be an object")
    _expect(isinstance(doc.get("sections"), list), "$.sections", "must be a list")

    sections: list[Section] = []
    seen_ids: set[ControlId] = set()
    seen_keys: set[str] = set()
    last_req = 0
    for s_index, raw_section in enumerate(doc["sections"]):
        s_path = f"$.sections[{s_index}]"
        _expect(isinstance(raw_section, dict), s_path, "must be an object")
        key = raw_section.get("key")
        title = raw_section.get("title")
        _expect(isinstance(key, str) and key != "", f"{s_path}.key", "must be a non-empty string")
        _expect(isinstance(title, str), f"{s_path}.title", "must be a string")
        _expect(key not in seen_keys, f"{s_path}.key", f"duplicate section key {key!r}")
        seen_keys.add(key)
        raw_controls = raw_section.get("controls")
        _expect(isinstance(raw_controls, list), f"{s_path}.controls", "must be a list")

        controls: list[Control] = []
        for c_index, raw in enumerate(raw_controls):
            c_path = f"{s_path}.controls[{c_index}]"
            _expect(isinstance(raw, dict), c_path, "must be an object")
            req = raw.get("req")
            _expect(isinstance(req, int) and not isinstance(req, bool) and req >= 1,
                    f"{c_path}.req", "must be a positive integer")
            _expect(isinstance(raw.get("id"), str), f"{c_path}.id", "must be a string")
            try:
                control_id = ControlId.parse(raw["id"])
            except ValueError as exc:
                raise SchemaViolation(f"{c_path}.id", str(exc)) from None
            _expect(isinstance(raw.get("category"), str), f"{c_path}.category", "must be a string")
            detail = raw.get("detail")
            _expect(isinstance(detail, str), f"{c_path}.detail", "must be a string")
            raw_levels = raw.get("levels")
            _expect(isinstance(raw_levels, list) and len(raw_levels) > 0,
                    f"{c_path}.levels", "must be a non-empty list")
            levels = set()
            for token in raw_levels:
                try:
                    levels.add(AssuranceLevel.from_name(token))
                except (ValueError, TypeError):
                    raise SchemaViolation(f"{c_path}.levels", f"unknown level {token!r}") from None

            # Same semantic rules as the CSV parser.
            if control_id in seen_ids:
                raise DuplicateControlId(str(control_id))
            seen_ids.add(control_id)
            if req <= last_req:
                raise NonMonotonicReq(req, last_req)
            last_req = req
            if not detail.strip():
                raise EmptyDetail(str(control_id))
            if controls:
                prev = controls[-1]
                _expect(control_id.section_number == prev.id.section_number, f"{c_path}.id",
                        f"control {control_id} does not belong to the same section as {prev.id}")
                _expect(control_id > prev.id, f"{c_path}.id",
                        f"control {control_id} is out of order after {prev.id}")
            controls.append(Control(req=req, id=control_id, category=raw["category"],
                                    detail=detail, levels=frozenset(levels)))
        sections.append(Section(key=key, title=title, controls=tuple(controls)))
    return ControlCatalog(sections=tuple(sections))


def validate_catalog(catalog: ControlCatalog, mode: Literal["strict", "lenient"] = "strict") -> list[Violation]:
    """Re-scan a catalog against every invariant.

    Structural breaches are always errors. The cumulative-level rule
    (L1 implies L2 and L3; L2 implies L3) is an error in strict mode and
    a warning in lenient mode, so that real-world exports that deviate
    can still be worked with. An empty result means the catalog passes.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    violations: list[Violation] = []
    cumulative_severity = "error" if mode == "strict" else "warning"

    seen_ids: set[ControlId] = set()
    seen_keys: set[str] = set()
    last_req = None
    for section in catalog.sections:
        if section.key in seen_keys:
            violations.append(Violation("duplicate-section-key", "error", section.key,
                                        f"section key {section.key!r} appears more than once"))
        seen_keys.add(section.key)
        prev_control = None
        for control in section.controls:
            cid = str(control.id)
            if control.id in seen_ids:
                violations.append(Violation("duplicate-control-id", "error", cid,
                                            f"control id {cid} appears more than once"))
            seen_ids.add(control.id)
            if last_req is not None and control.req <= last_req:
                violations.append(Violation("non-monotonic-req", "error", cid,
                                            f"req ordinal {control.req} does not increase past {last_req}"))
            last_req = control.req
            if not control.detail.strip():
                violations.append(Violation("empty-detail", "error", cid, "detail text is blank"))
            if not control.levels:
                violations.append(Violation("empty-levels", "error", cid, "no applicable levels"))
            if prev_control is not None:
                if control.id.section_number != prev_control.id.section_number:
                    violations.append(Violation("section-mismatch", "error", cid,
                                                f"control {cid} is grouped with section {prev_control.id.section_number}"))
                elif not control.id > prev_control.id:
                    violations.append(Violation("control-order", "error", cid,
                                                f"control {cid} is out of order after {prev_control.id}"))
            prev_control = control

            missing = _cumulative_gap(control.levels)
            if missing:
                violations.append(Violation(
                    "cumulative-levels", cumulative_severity, cid,
                    f"control {cid} is marked {_level_names(control.levels)} "
                    f"but cumulative levels also require {_level_names(missing)}",
                ))
    return violations


def _cumulative_gap(levels: frozenset[AssuranceLevel]) -> frozenset[AssuranceLevel]:
    """Levels implied by the cumulative rule but absent from the set."""
    if not levels:
        return frozenset()
    implied = {lv for lv in AssuranceLevel if lv >= min(levels)}
    return frozenset(implied - levels)


def _level_names(levels: frozenset[AssuranceLevel]) -> str:
    return "/".join(str(lv) for lv in sorted(levels))


def controls_at_level(catalog: ControlCatalog, level: AssuranceLevel) -> list[Control]:
    """All controls applicable at ``level``, in catalog order."""
    return [c for c in catalog.iter_controls() if level in c.levels]


def lookup(catalog: ControlCatalog, control_id: ControlId) -> Control | None:
    return catalog._by_id.get(control_id)
