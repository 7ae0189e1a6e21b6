"""Verification outcomes, the risk treatment plan, and the go-live gate.

State lives in an append-only event log so accreditors keep the full
evidence history; the in-memory store is a fold over the events and any
replay of the log reconstructs it exactly. Statuses are last-write-wins
per sprint and control.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

from .catalog import ControlId, section_key_from_category
from .errors import (
    AlreadyMitigated,
    ControlNotInScope,
    DuplicateFinding,
    FailWithoutFinding,
    SchemaViolation,
    UnknownFinding,
    UnknownSprint,
)
from .scope import TestScope
from .selection import SelectionState


class Severity(enum.IntEnum):
    """Severity scale shared by findings and the risk appetite."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_label(cls, label: str) -> "Severity":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown severity {label!r}") from None


class VerificationStatus(enum.Enum):
    NOT_TESTED = "not-tested"
    PASS = "pass"
    FAIL = "fail"

    @classmethod
    def from_label(cls, label: str) -> "VerificationStatus":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown status {label!r}") from None


class FindingState(enum.Enum):
    OPEN = "open"
    MITIGATED = "mitigated"


class GateVerdict(enum.Enum):
    PASS = "pass"
    BLOCKED = "blocked"
    ATO_GRANTED = "ato_granted"


@dataclass(frozen=True)
class Finding:
    finding_id: str
    control_id: ControlId
    severity: Severity
    description: str
    state: FindingState = FindingState.OPEN
    recorded_in_sprint: str = ""


@dataclass(frozen=True)
class RiskTreatmentPlan:
    findings: tuple[Finding, ...]


@dataclass(frozen=True)
class GateDecision:
    verdict: GateVerdict
    blocking: tuple[Finding, ...]
    appetite: Severity


@dataclass
class TrackingStore:
    project_id: str
    scopes: dict[str, tuple[ControlId, ...]] = field(default_factory=dict)
    results: dict[str, dict[ControlId, VerificationStatus]] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)

    def finding_by_id(self, finding_id: str) -> Finding | None:
        for finding in self.findings:
            if finding.finding_id == finding_id:
                return finding
        return None

    def status_of(self, sprint_ref: str, control_id: ControlId) -> VerificationStatus:
        return self.results.get(sprint_ref, {}).get(control_id, VerificationStatus.NOT_TESTED)


def register_scope(store: TrackingStore, sprint_ref: str, control_ids: list[ControlId]) -> TrackingStore:
    """Bind a sprint to its scoped controls; re-registering replaces the set."""
    store.scopes[sprint_ref] = tuple(control_ids)
    store.results.setdefault(sprint_ref, {})
    return store


def add_finding(store: TrackingStore, finding: Finding) -> TrackingStore:
    if store.finding_by_id(finding.finding_id) is not None:
        raise DuplicateFinding(finding.finding_id)
    in_history = any(finding.control_id in ids for ids in store.scopes.values())
    if not in_history:
        raise ControlNotInScope(str(finding.control_id), finding.recorded_in_sprint or "<any>")
    store.findings.append(finding)
    return store


def record_result(
    store: TrackingStore,
    sprint_ref: str,
    control_id: ControlId,
    status: VerificationStatus,
    findings: list[Finding] | None = None,
) -> TrackingStore:
    """Record one verification outcome; a fail must carry >= 1 finding."""
    scoped = store.scopes.get(sprint_ref)
    if scoped is None or control_id not in scoped:
        raise ControlNotInScope(str(control_id), sprint_ref)
    if status is VerificationStatus.FAIL and not findings:
        raise FailWithoutFinding(str(control_id))
    for finding in findings or []:
        add_finding(store, finding)
    store.results.setdefault(sprint_ref, {})[control_id] = status
    return store


def mitigate_finding(store: TrackingStore, finding_id: str) -> TrackingStore:
    for index, finding in enumerate(store.findings):
        if finding.finding_id == finding_id:
            if finding.state is FindingState.MITIGATED:
                raise AlreadyMitigated(finding_id)
            store.findings[index] = replace(finding, state=FindingState.MITIGATED)
            return store
    raise UnknownFinding(finding_id)


def _rtp_key(finding: Finding) -> tuple:
    # severity descending, then control id, open before mitigated, finding id
    return (
        -int(finding.severity),
        finding.control_id,
        0 if finding.state is FindingState.OPEN else 1,
        finding.finding_id,
    )


def build_rtp(store: TrackingStore) -> RiskTreatmentPlan:
    """All findings, highest severity first; mitigated ones stay for audit."""
    return RiskTreatmentPlan(findings=tuple(sorted(store.findings, key=_rtp_key)))


def golive_gate(store: TrackingStore, appetite: Severity, ato: bool = False) -> GateDecision:
    """Decide go-live: open findings at or above the appetite block.

    An Authority to Operate never hides blockers; the verdict becomes
    ``ato_granted`` with the blocking list still attached.
    """
    blocking = tuple(
        f for f in build_rtp(store).findings
        if f.state is FindingState.OPEN and f.severity >= appetite
    )
    if ato:
        verdict = GateVerdict.ATO_GRANTED
    elif blocking:
        verdict = GateVerdict.BLOCKED
    else:
        verdict = GateVerdict.PASS
    return GateDecision(verdict=verdict, blocking=blocking, appetite=appetite)


def gate_to_json(decision: GateDecision) -> str:
    payload = {
        "verdict": decision.verdict.value,
        "appetite": decision.appetite.label,
        "blocking": [finding.finding_id for finding in decision.blocking],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def carry_over(prev_scope: TestScope, store: TrackingStore, next_sprint_ref: str) -> SelectionState:
    """Selection for the next sprint: everything not yet passed carries over.

    Controls from the previous scope whose status is NotTested or Fail are
    required again, with their sections marked. Section keys are derived
    from the category prefix the same way the catalog parser derives them.
    """
    del next_sprint_ref  # the caller names the sprint when it generates the next scope
    sprint_ref = prev_scope.meta.sprint_ref
    if sprint_ref not in store.scopes:
        raise UnknownSprint(sprint_ref)
    statuses = store.results.get(sprint_ref, {})

    state = SelectionState(project_id=store.project_id)
    for group in prev_scope.groups:
        carried = [
            entry for entry in group.entries
            if statuses.get(entry.id, VerificationStatus.NOT_TESTED) is not VerificationStatus.PASS
        ]
        if not carried:
            continue
        key = section_key_from_category(carried[0].category)
        if key is None:
            key = f"S{carried[0].id.section_number}"
        state.sections[key] = True
        for entry in carried:
            state.controls[entry.id] = True
    return state


# --- event log ---------------------------------------------------------------
#
# One JSON object per line: {"at": iso8601, "event": ..., field: ...}.
# Events for one command are emitted findings-first so a replayed fail
# never observes a store without its findings.

def scope_registration_events(scope: TestScope) -> list[dict]:
    return [{
        "event": "register_scope",
        "sprint": scope.meta.sprint_ref,
        "controls": [str(entry.id) for entry in scope.iter_entries()],
    }]


def result_events(
    sprint_ref: str,
    control_id: ControlId,
    status: VerificationStatus,
    findings: list[Finding] | None = None,
) -> list[dict]:
    events = [
        {
            "event": "add_finding",
            "finding_id": f.finding_id,
            "control": str(f.control_id),
            "severity": f.severity.label,
            "description": f.description,
            "sprint": f.recorded_in_sprint,
        }
        for f in findings or []
    ]
    events.append({
        "event": "record_result",
        "sprint": sprint_ref,
        "control": str(control_id),
        "status": status.value,
    })
    return events


def mitigation_events(finding_id: str) -> list[dict]:
    return [{"event": "mitigate", "finding_id": finding_id}]


def _event_field(event: dict, key: str, line: int) -> str:
    value = event.get(key)
    if not isinstance(value, str):
        raise SchemaViolation(f"line {line}", f"event field {key!r} must be a string")
    return value


def apply_event(store: TrackingStore, event: dict, line: int = 0) -> TrackingStore:
    kind = event.get("event")
    if kind == "register_scope":
        sprint = _event_field(event, "sprint", line)
        controls = event.get("controls")
        if not isinstance(controls, list):
            raise SchemaViolation(f"line {line}", "event field 'controls' must be a list")
        return register_scope(store, sprint, [ControlId.parse(c) for c in controls])
    if kind == "add_finding":
        finding = Finding(
            finding_id=_event_field(event, "finding_id", line),
            control_id=ControlId.parse(_event_field(event, "control", line)),
            severity=Severity.from_label(_event_field(event, "severity", line)),
            description=_event_field(event, "description", line),
            recorded_in_sprint=_event_field(event, "sprint", line),
        )
        return add_finding(store, finding)
    if kind == "record_result":
        sprint = _event_field(event, "sprint", line)
        control_id = ControlId.parse(_event_field(event, "control", line))
        status = VerificationStatus.from_label(_event_field(event, "status", line))
        scoped = store.scopes.get(sprint)
        if scoped is None or control_id not in scoped:
            raise ControlNotInScope(str(control_id), sprint)
        # findings already applied by the preceding add_finding events
        store.results.setdefault(sprint, {})[control_id] = status
        return store
    if kind == "mitigate":
        return mitigate_finding(store, _event_field(event, "finding_id", line))
    raise SchemaViolation(f"line {line}", f"unknown event type {kind!r}")


def fold_events(project_id: str, lines: list[str]) -> TrackingStore:
    """Rebuild the store by replaying the log; replay is deterministic."""
    store = TrackingStore(project_id=project_id)
    for number, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            event = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"line {number}", f"not valid JSON: {exc}") from None
        if not isinstance(event, dict):
            raise SchemaViolation(f"line {number}", "event must be an object")
        apply_event(store, event, number)
    return store
