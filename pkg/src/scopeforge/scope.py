"""Test-scope documents: generation, canonical JSON, and renderers.

A scope freezes the controls a sprint's testers must verify. Entries
carry the full control text at generation time so the exported document
stays self-contained when handed to a third party, even if the catalog
file changes afterwards. All renderers are pure and byte-deterministic.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .catalog import (
    CSV_HEADER,
    REQUIRED_COLUMN,
    AssuranceLevel,
    ControlCatalog,
    ControlId,
)
from .errors import EmptyMeta, IoError, SchemaViolation, UnsupportedFormat
from .selection import (
    Classification,
    SelectionState,
    effective_selection,
    level_for_classification,
)

SCOPE_FORMATS = ("json", "markdown", "csv")
_FORMAT_EXTENSIONS = {"json": "json", "markdown": "md", "csv": "csv"}


class ServicePhase(enum.Enum):
    DISCOVERY = "discovery"
    ALPHA = "alpha"
    BETA = "beta"
    LIVE = "live"
    RETIREMENT = "retirement"

    @classmethod
    def from_label(cls, label: str) -> "ServicePhase":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown service phase {label!r}") from None


@dataclass(frozen=True)
class ProjectMeta:
    project_name: str
    sprint_ref: str
    date: dt.date
    phase: ServicePhase | None = None
    classification: Classification | None = None


@dataclass(frozen=True)
class ScopeEntry:
    req: int
    id: ControlId
    category: str
    detail: str
    levels: frozenset[AssuranceLevel]


@dataclass(frozen=True)
class ScopeGroup:
    title: str
    entries: tuple[ScopeEntry, ...]


@dataclass(frozen=True)
class TestScope:
    meta: ProjectMeta
    target_level: AssuranceLevel
    groups: tuple[ScopeGroup, ...]

    def iter_entries(self):
        for group in self.groups:
            yield from group.entries

    @property
    def entry_count(self) -> int:
        return sum(len(g.entries) for g in self.groups)


def generate_scope(
    catalog: ControlCatalog,
    state: SelectionState,
    meta: ProjectMeta,
    target_level: AssuranceLevel,
) -> TestScope:
    """Build the scope for one sprint from the effective selection.

    Entries are the effectively selected controls that apply at the
    target level, grouped under their section titles in catalog order;
    sections left without entries are omitted. Each control appears
    exactly once. The result is a pure function of its inputs.
    """
    if not meta.project_name.strip():
        raise EmptyMeta("project_name")
    if not meta.sprint_ref.strip():
        raise EmptyMeta("sprint_ref")

    selected, _warnings = effective_selection(catalog, state)
    selected_set = set(selected)
    groups: list[ScopeGroup] = []
    for section in catalog.sections:
        entries = tuple(
            ScopeEntry(req=c.req, id=c.id, category=c.category, detail=c.detail, levels=c.levels)
            for c in section.controls
            if c.id in selected_set and target_level in c.levels
        )
        if entries:
            groups.append(ScopeGroup(title=section.title, entries=entries))
    return TestScope(meta=meta, target_level=target_level, groups=tuple(groups))


def resolve_target_level(
    explicit: AssuranceLevel | None, classification: Classification | None
) -> AssuranceLevel:
    """An explicit level wins; otherwise the classification decides; else L1."""
    if explicit is not None:
        return explicit
    if classification is not None:
        return level_for_classification(classification)
    return AssuranceLevel.L1


# --- JSON --------------------------------------------------------------------

def serialize_scope_json(scope: TestScope) -> str:
    meta = scope.meta
    payload = {
        "meta": {
            "project_name": meta.project_name,
            "sprint_ref": meta.sprint_ref,
            "date": meta.date.isoformat(),
            "phase": meta.phase.value if meta.phase else None,
            "classification": meta.classification.name if meta.classification else None,
        },
        "target_level": str(scope.target_level),
        "groups": [
            {
                "title": group.title,
                "entries": [
                    {
                        "req": entry.req,
                        "id": str(entry.id),
                        "category": entry.category,
                        "detail": entry.detail,
                        "levels": [str(level) for level in sorted(entry.levels)],
                    }
                    for entry in group.entries
                ],
            }
            for group in scope.groups
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _expect(condition: bool, path: str, reason: str) -> None:
    if not condition:
        raise SchemaViolation(path, reason)


def deserialize_scope_json(text: str) -> TestScope:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from None
    _expect(isinstance(doc, dict), "$", "document must be an object")
    raw_meta = doc.get("meta")
    _expect(isinstance(raw_meta, dict), "$.meta", "must be an object")
    for key in ("project_name", "sprint_ref", "date"):
        _expect(isinstance(raw_meta.get(key), str), f"$.meta.{key}", "must be a string")
    try:
        date = dt.date.fromisoformat(raw_meta["date"])
    except ValueError as exc:
        raise SchemaViolation("$.meta.date", str(exc)) from None
    phase = None
    if raw_meta.get("phase") is not None:
        try:
            phase = ServicePhase.from_label(raw_meta["phase"])
        except (ValueError, AttributeError):
            raise SchemaViolation("$.meta.phase", f"unknown phase {raw_meta['phase']!r}") from None
    classification = None
    if raw_meta.get("classification") is not None:
        try:
            classification = Classification.from_label(raw_meta["classification"])
        except (ValueError, AttributeError):
            raise SchemaViolation(
                "$.meta.classification", f"unknown classification {raw_meta['classification']!r}"
            ) from None
    meta = ProjectMeta(
        project_name=raw_meta["project_name"],
        sprint_ref=raw_meta["sprint_ref"],
        date=date,
        phase=phase,
        classification=classification,
    )

    try:
        target_level = AssuranceLevel.from_name(doc.get("target_level"))
    except (ValueError, TypeError, KeyError):
        raise SchemaViolation("$.target_level", f"unknown level {doc.get('target_level')!r}") from None

    raw_groups = doc.get("groups")
    _expect(isinstance(raw_groups, list), "$.groups", "must be a list")
    groups: list[ScopeGroup] = []
    seen_ids: set[ControlId] = set()
    for g_index, raw_group in enumerate(raw_groups):
        g_path = f"$.groups[{g_index}]"
        _expect(isinstance(raw_group, dict), g_path, "must be an object")
        _expect(isinstance(raw_group.get("title"), str), f"{g_path}.title", "must be a string")
        raw_entries = raw_group.get("entries")
        _expect(isinstance(raw_entries, list), f"{g_path}.entries", "must be a list")
        entries: list[ScopeEntry] = []
        for e_index, raw in enumerate(raw_entries):
            e_path = f"{g_path}.entries[{e_index}]"
            _expect(isinstance(raw, dict), e_path, "must be an object")
            req = raw.get("req")
            _expect(isinstance(req, int) and not isinstance(req, bool) and req >= 1,
                    f"{e_path}.req", "must be a positive integer")
            _expect(isinstance(raw.get("id"), str), f"{e_path}.id", "must be a string")
            try:
                cid = ControlId.parse(raw["id"])
            except ValueError as exc:
                raise SchemaViolation(f"{e_path}.id", str(exc)) from None
            _expect(cid not in seen_ids, f"{e_path}.id", f"control {cid} appears more than once")
            seen_ids.add(cid)
            _expect(isinstance(raw.get("category"), str), f"{e_path}.category", "must be a string")
            _expect(isinstance(raw.get("detail"), str), f"{e_path}.detail", "must be a string")
            raw_levels = raw.get("levels")
            _expect(isinstance(raw_levels, list) and len(raw_levels) > 0,
                    f"{e_path}.levels", "must be a non-empty list")
            levels = set()
            for token in raw_levels:
                try:
                    levels.add(AssuranceLevel.from_name(token))
                except (ValueError, TypeError):
                    raise SchemaViolation(f"{e_path}.levels", f"unknown level {token!r}") from None
            _expect(target_level in levels, f"{e_path}.levels",
                    f"entry {cid} does not apply at target level {target_level}")
            entries.append(ScopeEntry(req=req, id=cid, category=raw["category"],
                                      detail=raw["detail"], levels=frozenset(levels)))
        groups.append(ScopeGroup(title=raw_group["title"], entries=tuple(entries)))
    return TestScope(meta=meta, target_level=target_level, groups=tuple(groups))


# --- renderers ---------------------------------------------------------------

def _format_date(date: dt.date, date_format: str | None) -> str:
    return date.strftime(date_format) if date_format else date.isoformat()


def _md_cell(text: str) -> str:
    return str(text).replace("\r", " ").replace("\n", " ").replace("|", "\\|")


def render_markdown(scope: TestScope, date_format: str | None = None) -> str:
    """Human-readable rendering, e.g. for pinning next to the task board."""
    meta = scope.meta
    head_cols = ["Project", "Sprint", "Date", "Level"]
    head_vals = [
        _md_cell(meta.project_name),
        _md_cell(meta.sprint_ref),
        _format_date(meta.date, date_format),
        str(scope.target_level),
    ]
    if meta.phase is not None:
        head_cols.append("Phase")
        head_vals.append(meta.phase.value)

    lines = [f"# Test Scope: {_md_cell(meta.project_name)}", ""]
    lines.append("| " + " | ".join(head_cols) + " |")
    lines.append("|" + "|".join(" --- " for _ in head_cols) + "|")
    lines.append("| " + " | ".join(head_vals) + " |")
    for group in scope.groups:
        lines.append("")
        lines.append(f"## {_md_cell(group.title)}")
        lines.append("")
        lines.append("| Req | Control | Category | Detail | Level 1 | Level 2 | Level 3 |")
        lines.append("| ---: | --- | --- | --- | :-: | :-: | :-: |")
        for entry in group.entries:
            marks = ["x" if level in entry.levels else "" for level in AssuranceLevel]
            lines.append(
                "| "
                + " | ".join(
                    [str(entry.req), str(entry.id), _md_cell(entry.category), _md_cell(entry.detail), *marks]
                )
                + " |"
            )
    return "\n".join(lines) + "\n"


def render_csv(scope: TestScope) -> str:
    """Spreadsheet-compatible export; re-importable by the catalog parser."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER + (REQUIRED_COLUMN,))
    for group in scope.groups:
        writer.writerow(["", "", group.title, "", "", "", "", ""])
        for entry in group.entries:
            marks = ["x" if level in entry.levels else "" for level in AssuranceLevel]
            writer.writerow([entry.req, str(entry.id), entry.category, entry.detail, *marks, "Y"])
    return out.getvalue()


def render_scope(scope: TestScope, fmt: str, date_format: str | None = None) -> str:
    if fmt == "json":
        return serialize_scope_json(scope)
    if fmt == "markdown":
        return render_markdown(scope, date_format)
    if fmt == "csv":
        return render_csv(scope)
    raise UnsupportedFormat(fmt)


# --- saving ------------------------------------------------------------------

def slugify(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")
    return slug or "untitled"


def default_scope_filename(scope: TestScope, fmt: str) -> str:
    if fmt not in SCOPE_FORMATS:
        raise UnsupportedFormat(fmt)
    stem = f"{slugify(scope.meta.project_name)}-{slugify(scope.meta.sprint_ref)}-scope"
    return f"{stem}.{_FORMAT_EXTENSIONS[fmt]}"


def atomic_write_text(path: Path, text: str) -> None:
    """Write via temp file + rename so readers never see a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except OSError:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def save_scope(
    scope: TestScope, path: str | Path, fmt: str, date_format: str | None = None
) -> Path:
    """Render and atomically write the scope; returns the file written.

    A directory path gets the default ``<project>-<sprint>-scope.<ext>``
    filename inside it; any other path is used as the exact target file.
    """
    text = render_scope(scope, fmt, date_format)
    target = Path(path)
    if target.is_dir():
        target = target / default_scope_filename(scope, fmt)
    try:
        atomic_write_text(target, text)
    except OSError as exc:
        raise IoError(str(target), str(exc)) from None
    return target
