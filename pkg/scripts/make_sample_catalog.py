"""Regenerate the bundled sample catalog through the canonical CSV writer."""

from __future__ import annotations

from pathlib import Path

from scopeforge.catalog import (
    AssuranceLevel,
    Control,
    ControlCatalog,
    ControlId,
    Section,
    serialize_catalog_csv,
)

ALL_LEVELS = frozenset(AssuranceLevel)

V1 = "V1: Architecture, design and threat modelling"
V2 = "V2: Authentication Verification Requirements"
V3 = "V3: Session Management Verification Requirements"

ROWS = [
    (1, "1.1", V1, "Verify that all application components are identified and are known to be needed."),
    (2, "1.2", V1, "Verify that all components, such as libraries, modules, and external systems, that are not part of the application but that the application relies on to operate are identified."),
    (3, "1.3", V1, "Verify that a high-level architecture for the application has been defined."),
    (4, "1.4", V1, "Verify that all application components are defined in terms of the business functions and/or security functions they provide."),
    (5, "1.5", V1, "Verify that all components that are not part of the application but that the application relies on to operate are defined in terms of the functions, and/or security functions, they provide."),
    (6, "1.6", V1, "Verify that a threat model for the target application has been produced and covers off risks associated with Spoofing, Tampering, Repudiation, Information Disclosure, and Elevation of privilege (STRIDE)."),
    (7, "1.7", V1, "Verify all security controls (including libraries that call external security services) have a centralized implementation."),
    (8, "1.8", V1, "Verify that components are segregated from each other via a defined security control, such as network segmentation, firewall rules, or cloud based security groups."),
    (9, "1.9", V1, "Verify the application has a clear separation between the data layer, controller layer and the display layer, such that security decisions can be enforced on trusted systems."),
    (10, "1.10", V1, "Verify that there is no sensitive business logic, secret keys or other proprietary information in client side code."),
    (14, "2.6", V2, "Verify all authentication controls fail securely to ensure attackers cannot log in."),
    (18, "2.12", V2, "Verify that all suspicious authentication decisions are logged."),
    (37, "3.1", V3, "Verify that there is no custom session manager, or that the custom session manager is resistant against all common session management attacks."),
    (42, "3.6", V3, "Verify that the session id is never disclosed in URLs, error messages, or logs."),
]

SECTION_TITLES = {
    "V1": "Architecture Design and Threat Modelling",
    "V2": "Authentication Verification",
    "V3": "Session Management",
}


def build() -> ControlCatalog:
    grouped: dict[str, list[Control]] = {}
    for req, cid, category, detail in ROWS:
        control = Control(req=req, id=ControlId.parse(cid), category=category,
                          detail=detail, levels=ALL_LEVELS)
        grouped.setdefault(category.split(":")[0], []).append(control)
    sections = tuple(
        Section(key=key, title=SECTION_TITLES[key], controls=tuple(controls))
        for key, controls in grouped.items()
    )
    return ControlCatalog(sections=sections)


if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "src" / "scopeforge" / "data" / "sample_catalog.csv"
    target.write_text(serialize_catalog_csv(build()), encoding="utf-8", newline="")
    print(f"wrote {target}")
