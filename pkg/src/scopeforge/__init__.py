"""Security control catalogs, sprint test scopes, and go-live risk gating."""

from .catalog import (
    AssuranceLevel,
    Control,
    ControlCatalog,
    ControlId,
    Section,
    Violation,
    controls_at_level,
    lookup,
    parse_catalog_csv,
    parse_catalog_json,
    serialize_catalog_csv,
    serialize_catalog_json,
    validate_catalog,
)
from .scope import (
    ProjectMeta,
    ScopeEntry,
    ScopeGroup,
    ServicePhase,
    TestScope,
    deserialize_scope_json,
    generate_scope,
    render_csv,
    render_markdown,
    save_scope,
    serialize_scope_json,
)
from .selection import (
    Classification,
    OrphanControlSelection,
    SelectionState,
    deserialize_selection,
    effective_selection,
    level_for_classification,
    new_selection,
    parse_required_token,
    reset_selection,
    serialize_selection,
    set_control_required,
    set_section_required,
)
from .tracking import (
    Finding,
    FindingState,
    GateDecision,
    GateVerdict,
    RiskTreatmentPlan,
    Severity,
    TrackingStore,
    VerificationStatus,
    build_rtp,
    carry_over,
    golive_gate,
    mitigate_finding,
    record_result,
    register_scope,
)

__version__ = "0.1.0"
