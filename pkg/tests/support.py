"""Shared test helpers: random instance generators and independent oracles.

The oracles deliberately re-derive expected results with brute-force
scans and explicit pairwise comparisons so they stay independent of the
implementation paths they check.
"""

from __future__ import annotations

import random

from scopeforge.catalog import (
    AssuranceLevel,
    Control,
    ControlCatalog,
    ControlId,
    Section,
)
from scopeforge.selection import SelectionState, new_selection, set_control_required, set_section_required
from scopeforge.tracking import Finding, FindingState, Severity

ALL_LEVELS = frozenset(AssuranceLevel)
CUMULATIVE_LEVEL_SETS = (
    frozenset({AssuranceLevel.L1, AssuranceLevel.L2, AssuranceLevel.L3}),
    frozenset({AssuranceLevel.L2, AssuranceLevel.L3}),
    frozenset({AssuranceLevel.L3}),
)
NONEMPTY_LEVEL_SETS = tuple(
    frozenset(levels)
    for levels in (
        {AssuranceLevel.L1}, {AssuranceLevel.L2}, {AssuranceLevel.L3},
        {AssuranceLevel.L1, AssuranceLevel.L2}, {AssuranceLevel.L1, AssuranceLevel.L3},
        {AssuranceLevel.L2, AssuranceLevel.L3},
        {AssuranceLevel.L1, AssuranceLevel.L2, AssuranceLevel.L3},
    )
)


def random_catalog(rng: random.Random, max_controls: int = 50, cumulative: bool = True) -> ControlCatalog:
    """A structurally valid catalog with random shape and level marks."""
    n_sections = rng.randint(1, 4)
    total = rng.randint(n_sections, max_controls)
    sections = []
    req = 0
    remaining = total
    for s in range(1, n_sections + 1):
        sections_left = n_sections - s
        n_controls = remaining - sections_left if sections_left == 0 else rng.randint(1, remaining - sections_left)
        remaining -= n_controls
        item = 0
        controls = []
        for _ in range(n_controls):
            item += rng.randint(1, 3)
            req += rng.randint(1, 3)
            pool = CUMULATIVE_LEVEL_SETS if cumulative else NONEMPTY_LEVEL_SETS
            controls.append(Control(
                req=req,
                id=ControlId(s, item),
                category=f"V{s}: Generated category {s}",
                detail=f"Verify generated requirement {s}.{item} is satisfied.",
                levels=rng.choice(pool),
            ))
        sections.append(Section(key=f"V{s}", title=f"Generated section {s}", controls=tuple(controls)))
    return ControlCatalog(sections=tuple(sections))


def random_selection(rng: random.Random, catalog: ControlCatalog,
                     project_id: str = "generated") -> SelectionState:
    """Random marks, including occasional orphan controls."""
    state = new_selection(project_id, catalog)
    for section in catalog.sections:
        if rng.random() < 0.7:
            state = set_section_required(state, section.key, True)
        for control in section.controls:
            if rng.random() < 0.5:
                state = set_control_required(state, control.id, True)
    return state


def random_findings(rng: random.Random, count: int,
                    sprint: str = "Ref 1") -> list[Finding]:
    """Findings with shuffled ids and deliberately colliding sort keys."""
    ids = [f"F-{i:04d}" for i in range(1, count + 1)]
    rng.shuffle(ids)
    findings = []
    for finding_id in ids:
        findings.append(Finding(
            finding_id=finding_id,
            control_id=ControlId(rng.randint(1, 3), rng.randint(1, 4)),
            severity=rng.choice(list(Severity)),
            description=f"generated finding {finding_id}",
            state=rng.choice([FindingState.OPEN, FindingState.MITIGATED]),
            recorded_in_sprint=sprint,
        ))
    return findings


# --- independent oracles -----------------------------------------------------

def independent_catalog_breaches(catalog: ControlCatalog) -> set[tuple[str, str]]:
    """O(n^2) re-scan of every catalog invariant, written without reusing
    any of the validator's machinery. Returns (kind, subject) pairs."""
    breaches: set[tuple[str, str]] = set()
    all_controls = [c for section in catalog.sections for c in section.controls]
    keys = [section.key for section in catalog.sections]

    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] == keys[j]:
                breaches.add(("duplicate-section-key", keys[j]))
    for i in range(len(all_controls)):
        for j in range(i + 1, len(all_controls)):
            if all_controls[i].id == all_controls[j].id:
                breaches.add(("duplicate-control-id", str(all_controls[j].id)))
    for i in range(1, len(all_controls)):
        if all_controls[i].req <= all_controls[i - 1].req:
            breaches.add(("non-monotonic-req", str(all_controls[i].id)))
    for control in all_controls:
        if control.detail.strip() == "":
            breaches.add(("empty-detail", str(control.id)))
        if len(control.levels) == 0:
            breaches.add(("empty-levels", str(control.id)))
        has = {int(level) for level in control.levels}
        if 1 in has and not (2 in has and 3 in has):
            breaches.add(("cumulative-levels", str(control.id)))
        elif 2 in has and 3 not in has:
            breaches.add(("cumulative-levels", str(control.id)))
    for section in catalog.sections:
        members = list(section.controls)
        for i in range(1, len(members)):
            if members[i].id.section_number != members[0].id.section_number:
                breaches.add(("section-mismatch", str(members[i].id)))
            elif (members[i].id.section_number, members[i].id.item_number) <= (
                    members[i - 1].id.section_number, members[i - 1].id.item_number):
                breaches.add(("control-order", str(members[i].id)))
    return breaches


def scope_entry_oracle(catalog: ControlCatalog, state: SelectionState,
                       level: AssuranceLevel) -> list[ControlId]:
    """Expected scope contents: required-and-sectioned controls that apply
    at the level, re-derived with plain set logic in catalog order."""
    wanted_sections = {key for key, on in state.sections.items() if on}
    wanted_controls = {cid for cid, on in state.controls.items() if on}
    expected = []
    for section in catalog.sections:
        for control in section.controls:
            if section.key in wanted_sections and control.id in wanted_controls:
                if level in control.levels:
                    expected.append(control.id)
    return expected


def rtp_comes_before(a: Finding, b: Finding) -> bool:
    """Pairwise comparison spelling out the treatment-plan ordering."""
    if a.severity != b.severity:
        return int(a.severity) > int(b.severity)
    a_cid = (a.control_id.section_number, a.control_id.item_number)
    b_cid = (b.control_id.section_number, b.control_id.item_number)
    if a_cid != b_cid:
        return a_cid < b_cid
    if a.state != b.state:
        return a.state is FindingState.OPEN
    return a.finding_id < b.finding_id


def rtp_oracle(findings: list[Finding]) -> list[Finding]:
    """Insertion sort over the explicit comparator."""
    ordered: list[Finding] = []
    for finding in findings:
        position = 0
        while position < len(ordered) and rtp_comes_before(ordered[position], finding):
            position += 1
        ordered.insert(position, finding)
    return ordered


def gate_oracle(findings: list[Finding], appetite: Severity, ato: bool) -> tuple[str, list[str]]:
    """Brute-force gate: an open finding at or above appetite blocks."""
    blocking = [
        f.finding_id
        for f in rtp_oracle(findings)
        if f.state is FindingState.OPEN and int(f.severity) >= int(appetite)
    ]
    if ato:
        verdict = "ato_granted"
    elif blocking:
        verdict = "blocked"
    else:
        verdict = "pass"
    return verdict, blocking
