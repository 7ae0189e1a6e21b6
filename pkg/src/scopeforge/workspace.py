"""Project workspace: one directory holding config, catalog snapshot,
selection file, scope outputs, and the tracking log.

All mutating commands run under an advisory file lock so concurrent CLI
invocations on one project are serialized. Timestamps come through an
injectable clock (the SCOPEFORGE_NOW environment variable pins it for
reproducible runs).
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .catalog import ControlCatalog, parse_catalog_json, serialize_catalog_json
from .errors import AlreadyInitialized, NotInitialized
from .scope import TestScope, atomic_write_text, deserialize_scope_json, serialize_scope_json
from .selection import (
    Classification,
    SelectionState,
    deserialize_selection,
    new_selection,
    serialize_selection,
)
from .tracking import Severity, TrackingStore, fold_events

CONFIG_FILENAME = "scopeforge.toml"
CATALOG_FILENAME = "catalog.json"
SELECTION_FILENAME = "selection.json"
SCOPE_FILENAME = "scope.json"
TRACKING_FILENAME = "tracking.jsonl"
LOCK_FILENAME = ".scopeforge.lock"

ENV_ROOT = "SCOPEFORGE_ROOT"
ENV_NOW = "SCOPEFORGE_NOW"


def now() -> dt.datetime:
    """Current UTC time, overridable via SCOPEFORGE_NOW for deterministic runs."""
    pinned = os.environ.get(ENV_NOW)
    if pinned:
        stamp = dt.datetime.fromisoformat(pinned.replace("Z", "+00:00"))
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=dt.timezone.utc)
        return stamp
    return dt.datetime.now(dt.timezone.utc)


@dataclass
class CliConfig:
    default_classification: Classification | None = None
    default_appetite: Severity = Severity.MEDIUM
    date_format: str | None = None
    strict_validation: bool = True


def render_config(config: CliConfig) -> str:
    lines = ["# scopeforge workspace configuration"]
    if config.default_classification is not None:
        lines.append(f"default_classification = {config.default_classification.name}")
    lines.append(f"default_appetite = {config.default_appetite.label}")
    if config.date_format is not None:
        lines.append(f'date_format = "{config.date_format}"')
    lines.append(f"strict_validation = {'true' if config.strict_validation else 'false'}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> CliConfig:
    """Flat key=value parser; quotes around values are optional."""
    config = CliConfig()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip('"').strip("'")
        if key == "default_classification" and value:
            config.default_classification = Classification.from_label(value)
        elif key == "default_appetite" and value:
            config.default_appetite = Severity.from_label(value)
        elif key == "date_format":
            config.date_format = value or None
        elif key == "strict_validation" and value:
            config.strict_validation = value.lower() in ("true", "yes", "1")
    return config


class ProjectWorkspace:
    """Filesystem facade for one project; paths resolve against the root."""

    def __init__(self, root: Path):
        self.root = Path(root)

    # -- paths

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_FILENAME

    @property
    def catalog_path(self) -> Path:
        return self.root / CATALOG_FILENAME

    @property
    def selection_path(self) -> Path:
        return self.root / SELECTION_FILENAME

    @property
    def scope_path(self) -> Path:
        return self.root / SCOPE_FILENAME

    @property
    def tracking_path(self) -> Path:
        return self.root / TRACKING_FILENAME

    @property
    def project_id(self) -> str:
        return self.root.resolve().name

    def lock(self, timeout: float = 10.0) -> FileLock:
        return FileLock(self.root / LOCK_FILENAME, timeout=timeout)

    # -- lifecycle

    @classmethod
    def initialize(cls, directory: str | Path) -> "ProjectWorkspace":
        ws = cls(Path(directory))
        if ws.config_path.exists():
            raise AlreadyInitialized(str(ws.root))
        ws.root.mkdir(parents=True, exist_ok=True)
        atomic_write_text(ws.config_path, render_config(CliConfig()))
        atomic_write_text(ws.selection_path, serialize_selection(new_selection(ws.project_id)))
        ws.tracking_path.touch()
        return ws

    @classmethod
    def open(cls, directory: str | Path) -> "ProjectWorkspace":
        ws = cls(Path(directory))
        if not ws.config_path.is_file():
            raise NotInitialized(str(ws.root))
        return ws

    # -- config

    def load_config(self) -> CliConfig:
        return parse_config(self.config_path.read_text(encoding="utf-8"))

    def save_config(self, config: CliConfig) -> None:
        atomic_write_text(self.config_path, render_config(config))

    # -- catalog snapshot

    def has_catalog(self) -> bool:
        return self.catalog_path.is_file()

    def load_catalog(self) -> ControlCatalog:
        return parse_catalog_json(self.catalog_path.read_text(encoding="utf-8"))

    def save_catalog(self, catalog: ControlCatalog) -> None:
        atomic_write_text(self.catalog_path, serialize_catalog_json(catalog))

    # -- selection

    def load_selection(self, catalog: ControlCatalog) -> SelectionState:
        return deserialize_selection(self.selection_path.read_text(encoding="utf-8"), catalog)

    def save_selection(self, state: SelectionState) -> None:
        atomic_write_text(self.selection_path, serialize_selection(state))

    # -- current scope

    def has_scope(self) -> bool:
        return self.scope_path.is_file()

    def load_scope(self) -> TestScope:
        return deserialize_scope_json(self.scope_path.read_text(encoding="utf-8"))

    def save_scope_snapshot(self, scope: TestScope) -> None:
        atomic_write_text(self.scope_path, serialize_scope_json(scope))

    # -- tracking log

    def load_store(self) -> TrackingStore:
        if not self.tracking_path.is_file():
            return TrackingStore(project_id=self.project_id)
        lines = self.tracking_path.read_text(encoding="utf-8").splitlines()
        return fold_events(self.project_id, lines)

    def append_events(self, events: list[dict]) -> None:
        """Append events with timestamps; one JSON object per line."""
        stamp = now().isoformat()
        with self.tracking_path.open("a", encoding="utf-8", newline="") as log:
            for event in events:
                log.write(json.dumps({"at": stamp, **event}, ensure_ascii=False) + "\n")


def resolve_root(explicit: str | None) -> Path:
    """CLI root precedence: --root flag, then $SCOPEFORGE_ROOT, then cwd."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(ENV_ROOT)
    if env:
        return Path(env)
    return Path.cwd()
