from __future__ import annotations

import datetime as dt

import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {name}: {outcome}")

from scopeforge.catalog import ControlId
from scopeforge.samples import sample_catalog, sample_catalog_csv
from scopeforge.scope import ProjectMeta
from scopeforge.selection import new_selection, set_control_required, set_section_required

WORKED_CONTROLS = ("1.2", "1.5", "2.6", "2.12", "3.1", "3.6")


@pytest.fixture(scope="session")
def sample_text() -> str:
    return sample_catalog_csv()


@pytest.fixture()
def catalog():
    return sample_catalog()


@pytest.fixture()
def worked_selection(catalog):
    """Sections V1..V3 with the six controls of the worked example required."""
    state = new_selection("web-app", catalog)
    for key in ("V1", "V2", "V3"):
        state = set_section_required(state, key, True)
    for cid in WORKED_CONTROLS:
        state = set_control_required(state, ControlId.parse(cid), True)
    return state


@pytest.fixture()
def worked_meta():
    return ProjectMeta(project_name="Web app", sprint_ref="Ref 1", date=dt.date(2016, 1, 5))
