"""Acceptance suite: every exit criterion at its stated tolerance.

Each test is one criterion; conftest prints an ACCEPTANCE pass/fail line
per criterion. Expected values come from independent oracles defined in
support.py (brute-force scans and explicit comparison sorts), from
exhaustive enumeration, or from hand-computed constants.
"""

from __future__ import annotations

import datetime as dt
import itertools
import json
import random
import time

from scopeforge.catalog import (
    AssuranceLevel,
    ControlId,
    parse_catalog_csv,
    parse_catalog_json,
    serialize_catalog_json,
    validate_catalog,
)
from scopeforge.cli import main
from scopeforge.samples import sample_catalog
from scopeforge.scope import (
    ProjectMeta,
    deserialize_scope_json,
    generate_scope,
    serialize_scope_json,
)
from scopeforge.selection import (
    Classification,
    deserialize_selection,
    level_for_classification,
    new_selection,
    parse_required_token,
    reset_selection,
    serialize_selection,
    set_control_required,
    set_section_required,
)
from scopeforge.tracking import (
    Finding,
    FindingState,
    GateVerdict,
    Severity,
    TrackingStore,
    build_rtp,
    golive_gate,
)
from support import (
    gate_oracle,
    random_catalog,
    random_findings,
    random_selection,
    rtp_oracle,
    scope_entry_oracle,
)

WORKED_META = ProjectMeta(project_name="Web app", sprint_ref="Ref 1", date=dt.date(2016, 1, 5))


def worked_selection(catalog):
    state = new_selection("web-app", catalog)
    for key in ("V1", "V2", "V3"):
        state = set_section_required(state, key, True)
    for cid in ("1.2", "1.5", "2.6", "2.12", "3.1", "3.6"):
        state = set_control_required(state, ControlId.parse(cid), True)
    return state


def test_worked_example_scope_reproduction():
    catalog = sample_catalog()
    started = time.perf_counter()
    scope = generate_scope(catalog, worked_selection(catalog), WORKED_META, AssuranceLevel.L1)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    assert scope.entry_count == 6
    assert len(scope.groups) == 3
    assert [[str(e.id) for e in g.entries] for g in scope.groups] == [
        ["1.2", "1.5"], ["2.6", "2.12"], ["3.1", "3.6"],
    ]
    ids = [e.id for e in scope.iter_entries()]
    assert len(set(ids)) == len(ids) == 6


def test_required_token_table():
    accepted = {"Y", "y", "YES", "yes", "Yes"}
    for token in accepted:
        assert parse_required_token(token) is True
    rejected = [
        "", "N", "x", "TRUE", " Y",  # no trimming, closed token list
        "Y ", "\tY", "Y\n", "n", "no", "NO", "yES", "YEs", "yEs", "Ye", "yess",
        "true", "1", "0", "required", "X", "xx", "oui", "ja", "si", "YESS",
    ]
    assert not accepted.intersection(rejected)
    for token in rejected:
        assert parse_required_token(token) is False, token


def test_classification_level_mapping():
    expected = {
        Classification.OFFICIAL: AssuranceLevel.L1,
        Classification.OFFICIAL_SENSITIVE: AssuranceLevel.L2,
        Classification.SECRET: AssuranceLevel.L3,
        Classification.TOP_SECRET: AssuranceLevel.L3,
    }
    assert set(expected) == set(Classification)
    for classification, level in expected.items():
        assert level_for_classification(classification) is level
    ordered = sorted(Classification)
    for a, b in itertools.combinations(ordered, 2):
        assert level_for_classification(a) <= level_for_classification(b)


def test_reset_always_clears_generated_scope():
    catalog = sample_catalog()
    rng = random.Random(20160105)
    for _ in range(50):
        prior = random_selection(rng, catalog)
        cleared = reset_selection(prior)
        scope = generate_scope(catalog, cleared, WORKED_META,
                               rng.choice(list(AssuranceLevel)))
        assert scope.entry_count == 0
        assert scope.groups == ()


def test_scope_level_monotonicity_against_oracle():
    rng = random.Random(424242)
    for _ in range(200):
        catalog = random_catalog(rng, max_controls=50, cumulative=True)
        assert validate_catalog(catalog, "strict") == []
        state = random_selection(rng, catalog)
        entries_by_level = {}
        for level in AssuranceLevel:
            scope = generate_scope(catalog, state, WORKED_META, level)
            got = [e.id for e in scope.iter_entries()]
            expected = scope_entry_oracle(catalog, state, level)
            assert got == expected  # set and order equality
            entries_by_level[level] = set(got)
        assert entries_by_level[AssuranceLevel.L1] <= entries_by_level[AssuranceLevel.L2]
        assert entries_by_level[AssuranceLevel.L2] <= entries_by_level[AssuranceLevel.L3]


def test_rtp_ordering_against_sort_oracle():
    rng = random.Random(8675309)
    for _ in range(200):
        store = TrackingStore(project_id="p")
        store.findings.extend(random_findings(rng, rng.randint(0, 30)))
        plan = build_rtp(store)
        assert list(plan.findings) == rtp_oracle(store.findings)
        assert sorted(f.finding_id for f in plan.findings) == sorted(
            f.finding_id for f in store.findings)


def test_gate_truth_table_exhaustive():
    kinds = list(itertools.product(Severity, FindingState))
    shapes = []
    for size in range(0, 5):
        shapes.extend(itertools.combinations_with_replacement(kinds, size))
    for shape in shapes:
        store = TrackingStore(project_id="p")
        for index, (severity, state) in enumerate(shape, start=1):
            store.findings.append(Finding(
                finding_id=f"F-{index:04d}", control_id=ControlId(1, index),
                severity=severity, description="generated", state=state,
                recorded_in_sprint="Ref 1",
            ))
        for appetite in Severity:
            for ato in (False, True):
                decision = golive_gate(store, appetite, ato)
                verdict, blocking = gate_oracle(store.findings, appetite, ato)
                assert decision.verdict.value == verdict
                assert [f.finding_id for f in decision.blocking] == blocking
                if ato:
                    assert decision.verdict is GateVerdict.ATO_GRANTED
                if decision.blocking:
                    assert decision.verdict is not GateVerdict.PASS


def _run_worked_sequence(root, catalog_file) -> None:
    def run(*args) -> int:
        return main(["--root", str(root), *args])

    assert run("init") == 0
    assert run("catalog", "import", str(catalog_file)) == 0
    assert run("select", "--section", "V1", "--control", "1.2", "--control", "1.5") == 0
    assert run("select", "--section", "V2", "--control", "2.6", "--control", "2.12") == 0
    assert run("select", "--section", "V3", "--control", "3.1", "--control", "3.6") == 0
    assert run("scope", "generate", "--project", "Web app", "--sprint", "Ref 1",
               "--date", "2016-01-05", "--level", "L1") == 0
    for fmt in ("json", "md", "csv"):
        assert run("scope", "export", "--format", fmt) == 0


def test_full_sequence_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SCOPEFORGE_NOW", "2016-01-05T09:00:00Z")
    catalog_file = tmp_path / "catalog.csv"
    from scopeforge.samples import sample_catalog_csv
    catalog_file.write_text(sample_catalog_csv(), encoding="utf-8")

    first = tmp_path / "one" / "web-app"
    second = tmp_path / "two" / "web-app"
    _run_worked_sequence(first, catalog_file)
    _run_worked_sequence(second, catalog_file)
    capsys.readouterr()

    exports = ["web-app-ref-1-scope.json", "web-app-ref-1-scope.md", "web-app-ref-1-scope.csv"]
    for name in exports:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    reparsed = parse_catalog_csv((first / "web-app-ref-1-scope.csv").read_text(encoding="utf-8"))
    assert {str(c.id) for c in reparsed.iter_controls()} == {
        "1.2", "1.5", "2.6", "2.12", "3.1", "3.6"}


def test_serialization_round_trips():
    catalog = sample_catalog()
    assert parse_catalog_json(serialize_catalog_json(catalog)) == catalog
    fixture_selection = worked_selection(catalog)
    assert deserialize_selection(serialize_selection(fixture_selection), catalog) == fixture_selection
    fixture_scope = generate_scope(catalog, fixture_selection, WORKED_META, AssuranceLevel.L1)
    assert deserialize_scope_json(serialize_scope_json(fixture_scope)) == fixture_scope

    rng = random.Random(314159)
    for _ in range(100):
        cat = random_catalog(rng)
        assert parse_catalog_json(serialize_catalog_json(cat)) == cat
        state = random_selection(rng, cat)
        assert deserialize_selection(serialize_selection(state), cat) == state
        scope = generate_scope(cat, state, WORKED_META, rng.choice(list(AssuranceLevel)))
        assert deserialize_scope_json(serialize_scope_json(scope)) == scope


def test_scope_json_is_byte_stable():
    catalog = sample_catalog()
    state = worked_selection(catalog)
    first = serialize_scope_json(generate_scope(catalog, state, WORKED_META, AssuranceLevel.L1))
    second = serialize_scope_json(generate_scope(catalog, state, WORKED_META, AssuranceLevel.L1))
    assert first == second
    doc = json.loads(first)
    assert list(doc) == ["meta", "target_level", "groups"]
