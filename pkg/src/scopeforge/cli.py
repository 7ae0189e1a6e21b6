"""Command-line workflow: import a catalog, select controls, generate the
sprint test scope, track results, and decide the go-live gate.

Exit codes are a function of the outcome class only:
0 success (or gate pass / ATO), 1 usage error, 2 validation or domain
error, 3 gate blocked.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import click
from filelock import Timeout as LockTimeout

from . import tracking
from .catalog import (
    AssuranceLevel,
    ControlCatalog,
    ControlId,
    controls_at_level,
    parse_catalog_csv,
    parse_catalog_json,
    validate_catalog,
)
from .errors import EmptyMeta, ScopeforgeError
from .scope import (
    ProjectMeta,
    ServicePhase,
    TestScope,
    generate_scope,
    resolve_target_level,
    save_scope,
)
from .selection import (
    Classification,
    SelectionState,
    effective_selection,
    new_selection,
    parse_required_token,
    reset_selection,
    selection_from_csv,
    set_control_required,
    set_section_required,
)
from .tracking import (
    Finding,
    GateVerdict,
    Severity,
    VerificationStatus,
    build_rtp,
    carry_over,
    gate_to_json,
    golive_gate,
)
from .workspace import ProjectWorkspace, now, resolve_root

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_BLOCKED = 3

_LEVEL_CHOICE = click.Choice(["L1", "L2", "L3"])
_CLASSIFICATION_CHOICE = click.Choice(
    ["OFFICIAL", "OFFICIAL_SENSITIVE", "SECRET", "TOP_SECRET"], case_sensitive=False
)
_PHASE_CHOICE = click.Choice([p.value for p in ServicePhase], case_sensitive=False)
_SEVERITY_CHOICE = click.Choice(["High", "Medium", "Low"], case_sensitive=False)


def _counted(count: int, noun: str) -> str:
    return f"{count} {noun}" if count == 1 else f"{count} {noun}s"


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _workspace(ctx: click.Context) -> ProjectWorkspace:
    return ProjectWorkspace.open(resolve_root(ctx.obj.get("root")))


def _require_catalog(ws: ProjectWorkspace) -> ControlCatalog:
    if not ws.has_catalog():
        raise ScopeforgeError("no catalog imported (run `scopeforge catalog import` first)")
    return ws.load_catalog()


def _parse_control_id(text: str) -> ControlId:
    try:
        return ControlId.parse(text)
    except ValueError as exc:
        raise click.BadParameter(str(exc))


@click.group()
@click.option("--root", type=click.Path(), default=None,
              help="Workspace root (default: $SCOPEFORGE_ROOT, then the current directory).")
@click.pass_context
def cli(ctx: click.Context, root: str | None) -> None:
    """Security control selection, test scoping, and go-live gating."""
    ctx.ensure_object(dict)
    ctx.obj["root"] = root


@cli.command("init")
@click.argument("directory", type=click.Path(), required=False)
@click.pass_context
def cmd_init(ctx: click.Context, directory: str | None) -> None:
    """Create a new project workspace with default configuration."""
    target = Path(directory) if directory else resolve_root(ctx.obj.get("root"))
    ws = ProjectWorkspace.initialize(target)
    config = ws.load_config()
    click.echo(f"Initialized workspace at {ws.root} (default appetite {config.default_appetite.label})")


# --- catalog -----------------------------------------------------------------

@cli.group("catalog")
def catalog_group() -> None:
    """Import, validate, and inspect the control catalog."""


@catalog_group.command("import")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
              help="Input format; inferred from the file extension when omitted.")
@click.pass_context
def cmd_catalog_import(ctx: click.Context, path: str, fmt: str | None) -> None:
    """Parse a catalog file and store it as the workspace snapshot."""
    ws = _workspace(ctx)
    with ws.lock():
        config = ws.load_config()
        text = Path(path).read_text(encoding="utf-8")
        if fmt is None:
            fmt = "json" if path.lower().endswith(".json") else "csv"
        catalog = parse_catalog_json(text) if fmt == "json" else parse_catalog_csv(text)
        mode = "strict" if config.strict_validation else "lenient"
        violations = validate_catalog(catalog, mode)
        for violation in violations:
            click.echo(f"{violation.severity.upper()} {violation.kind} {violation.subject}: "
                       f"{violation.message}", err=True)
        if any(v.severity == "error" for v in violations):
            raise ScopeforgeError("catalog rejected by strict validation")
        ws.save_catalog(catalog)
        click.echo(f"{_counted(catalog.control_count, 'control')} in "
                   f"{_counted(len(catalog.sections), 'section')}")


@catalog_group.command("validate")
@click.option("--mode", type=click.Choice(["strict", "lenient"]), default=None,
              help="Override the workspace strict_validation setting.")
@click.pass_context
def cmd_catalog_validate(ctx: click.Context, mode: str | None) -> None:
    """Re-check the imported catalog against every invariant."""
    ws = _workspace(ctx)
    with ws.lock():
        config = ws.load_config()
        catalog = _require_catalog(ws)
        if mode is None:
            mode = "strict" if config.strict_validation else "lenient"
        violations = validate_catalog(catalog, mode)
        for violation in violations:
            click.echo(f"{violation.severity.upper()} {violation.kind} {violation.subject}: "
                       f"{violation.message}")
        if any(v.severity == "error" for v in violations):
            raise ScopeforgeError(f"{_counted(len(violations), 'violation')} found")
        click.echo(f"catalog OK: {_counted(catalog.control_count, 'control')} in "
                   f"{_counted(len(catalog.sections), 'section')}")


@catalog_group.command("list")
@click.option("--level", type=_LEVEL_CHOICE, default=None,
              help="Only controls applicable at this assurance level.")
@click.pass_context
def cmd_catalog_list(ctx: click.Context, level: str | None) -> None:
    """Print catalog controls as a fixed-width table."""
    ws = _workspace(ctx)
    with ws.lock():
        catalog = _require_catalog(ws)
        if level is None:
            controls = list(catalog.iter_controls())
        else:
            controls = controls_at_level(catalog, AssuranceLevel.from_name(level))
        rows = [
            [str(c.req), str(c.id), "/".join(str(lv) for lv in sorted(c.levels)), c.detail]
            for c in controls
        ]
        click.echo(_table(["Req", "Control", "Levels", "Detail"], rows))


# --- selection ---------------------------------------------------------------

def _run_wizard(catalog: ControlCatalog, project_id: str) -> SelectionState | None:
    """Walk sections then controls, prompting with the accepted yes tokens.

    Returns the new selection, or None when the final confirmation is
    declined. Answers replace the previous selection entirely.
    """
    state = new_selection(project_id, catalog)
    for section in catalog.sections:
        click.echo(f"\nSection {section.key}: {section.title} "
                   f"({_counted(len(section.controls), 'control')})")
        answer = click.prompt(f"  Require section {section.key}?", default="", show_default=False)
        if not parse_required_token(answer):
            continue
        state = set_section_required(state, section.key, True)
        for control in section.controls:
            click.echo(f"    {control.id}: {control.detail}")
            answer = click.prompt(f"    Require control {control.id}?", default="", show_default=False)
            if parse_required_token(answer):
                state = set_control_required(state, control.id, True)
    selected_controls = sum(1 for on in state.controls.values() if on)
    selected_sections = sum(1 for on in state.sections.values() if on)
    click.echo(f"\nSelected {_counted(selected_sections, 'section')} and "
               f"{_counted(selected_controls, 'control')}.")
    answer = click.prompt("Save selection?", default="", show_default=False)
    if not parse_required_token(answer):
        click.echo("Selection discarded.")
        return None
    return state


@cli.command("select")
@click.option("--section", "sections", multiple=True, help="Mark a section as required.")
@click.option("--control", "controls", multiple=True, help="Mark a control as required.")
@click.option("--interactive", is_flag=True, help="Walk the catalog and answer y/n per item.")
@click.option("--from-csv", "from_csv", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Import marks from a catalog sheet with a trailing Required column.")
@click.pass_context
def cmd_select(ctx: click.Context, sections: tuple[str, ...], controls: tuple[str, ...],
               interactive: bool, from_csv: str | None) -> None:
    """Mark required sections and controls for this project."""
    ws = _workspace(ctx)
    with ws.lock():
        catalog = _require_catalog(ws)
        if interactive:
            state = _run_wizard(catalog, ws.project_id)
            if state is None:
                return
        elif from_csv:
            config = ws.load_config()
            text = Path(from_csv).read_text(encoding="utf-8")
            state, warnings = selection_from_csv(text, ws.project_id, catalog,
                                                 strict=config.strict_validation)
            for warning in warnings:
                click.echo(f"warning: {warning}", err=True)
        else:
            if not sections and not controls:
                raise click.UsageError("nothing to select: pass --section/--control, "
                                       "--interactive, or --from-csv")
            state = ws.load_selection(catalog)
            for key in sections:
                state = set_section_required(state, key, True)
            for cid_text in controls:
                state = set_control_required(state, _parse_control_id(cid_text), True)
        ws.save_selection(state)
        marked_sections = sum(1 for on in state.sections.values() if on)
        marked_controls = sum(1 for on in state.controls.values() if on)
        click.echo(f"Selection: {_counted(marked_sections, 'section')}, "
                   f"{_counted(marked_controls, 'control')} required")


@cli.command("reset")
@click.pass_context
def cmd_reset(ctx: click.Context) -> None:
    """Zero all selection marks (the project id is preserved)."""
    ws = _workspace(ctx)
    with ws.lock():
        if ws.has_catalog():
            state = reset_selection(ws.load_selection(ws.load_catalog()))
        else:
            state = new_selection(ws.project_id)
        ws.save_selection(state)
        click.echo("Selection reset.")


# --- scope -------------------------------------------------------------------

def _scope_meta_options(command):
    for option in (
        click.option("--project", default="", help="Project name."),
        click.option("--sprint", default="", help="Sprint reference."),
        click.option("--date", "date_text", default=None, help="Scope date (ISO 8601, e.g. 2016-01-05)."),
        click.option("--level", type=_LEVEL_CHOICE, default=None,
                     help="Target assurance level; overrides the classification mapping."),
        click.option("--classification", type=_CLASSIFICATION_CHOICE, default=None,
                     help="Security classification; picks the level when --level is omitted."),
        click.option("--phase", type=_PHASE_CHOICE, default=None, help="Service phase."),
    ):
        command = option(command)
    return command


def _build_scope(ws: ProjectWorkspace, project: str, sprint: str, date_text: str | None,
                 level: str | None, classification: str | None, phase: str | None) -> TestScope:
    # blank metadata is the caller's mistake even when no catalog exists yet
    if not project.strip():
        raise EmptyMeta("project_name")
    if not sprint.strip():
        raise EmptyMeta("sprint_ref")
    catalog = _require_catalog(ws)
    config = ws.load_config()
    state = ws.load_selection(catalog)
    if date_text is not None:
        try:
            date = dt.date.fromisoformat(date_text)
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--date")
    else:
        date = now().date()
    cls = Classification.from_label(classification) if classification else config.default_classification
    meta = ProjectMeta(
        project_name=project,
        sprint_ref=sprint,
        date=date,
        phase=ServicePhase.from_label(phase) if phase else None,
        classification=cls,
    )
    target = resolve_target_level(AssuranceLevel.from_name(level) if level else None, cls)
    _selected, warnings = effective_selection(catalog, state)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    return generate_scope(catalog, state, meta, target)


@cli.group("scope")
def scope_group() -> None:
    """Generate and export the sprint test scope."""


@scope_group.command("generate")
@_scope_meta_options
@click.pass_context
def cmd_scope_generate(ctx: click.Context, project: str, sprint: str, date_text: str | None,
                       level: str | None, classification: str | None, phase: str | None) -> None:
    """Create the test scope from the current selection and store it."""
    ws = _workspace(ctx)
    with ws.lock():
        scope = _build_scope(ws, project, sprint, date_text, level, classification, phase)
        ws.save_scope_snapshot(scope)
        ws.append_events(tracking.scope_registration_events(scope))
        click.echo(f"{_counted(scope.entry_count, 'control')} in "
                   f"{_counted(len(scope.groups), 'section')}")


@scope_group.command("export")
@click.option("--format", "fmt", type=click.Choice(["json", "md", "markdown", "csv"]),
              required=True, help="Output format.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Target file or directory (default: workspace root, default filename).")
@_scope_meta_options
@click.pass_context
def cmd_scope_export(ctx: click.Context, fmt: str, out_path: str | None, project: str,
                     sprint: str, date_text: str | None, level: str | None,
                     classification: str | None, phase: str | None) -> None:
    """Write the scope as JSON, Markdown, or CSV.

    Uses the stored scope; passing --project/--sprint regenerates it
    deterministically from the current selection instead.
    """
    ws = _workspace(ctx)
    with ws.lock():
        config = ws.load_config()
        if project or sprint or not ws.has_scope():
            scope = _build_scope(ws, project, sprint, date_text, level, classification, phase)
        else:
            scope = ws.load_scope()
        if fmt == "md":
            fmt = "markdown"
        target = Path(out_path) if out_path else ws.root
        written = save_scope(scope, target, fmt, config.date_format)
        click.echo(f"Wrote {written}")


# --- tracking ----------------------------------------------------------------

@cli.group("track")
def track_group() -> None:
    """Record verification results and evaluate the go-live gate."""


@track_group.command("result")
@click.argument("sprint")
@click.argument("control")
@click.argument("status", type=click.Choice(["pass", "fail", "not-tested"]))
@click.option("--finding", "finding_args", multiple=True, nargs=2, metavar="SEVERITY DESCRIPTION",
              help="Attach a finding (repeatable); required when the status is fail.")
@click.pass_context
def cmd_track_result(ctx: click.Context, sprint: str, control: str, status: str,
                     finding_args: tuple[tuple[str, str], ...]) -> None:
    """Record the verification outcome for one control in a sprint."""
    ws = _workspace(ctx)
    with ws.lock():
        store = ws.load_store()
        control_id = _parse_control_id(control)
        verification = VerificationStatus.from_label(status)
        findings = []
        for index, (severity_text, description) in enumerate(finding_args):
            try:
                severity = Severity.from_label(severity_text)
            except ValueError as exc:
                raise click.BadParameter(str(exc), param_hint="--finding")
            findings.append(Finding(
                finding_id=f"F-{len(store.findings) + index + 1:04d}",
                control_id=control_id,
                severity=severity,
                description=description,
                recorded_in_sprint=sprint,
            ))
        tracking.record_result(store, sprint, control_id, verification, findings)
        ws.append_events(tracking.result_events(sprint, control_id, verification, findings))
        click.echo(f"Recorded {control_id} {verification.value} in sprint {sprint}")
        for finding in findings:
            click.echo(f"  finding {finding.finding_id} ({finding.severity.label}): "
                       f"{finding.description}")


@track_group.command("mitigate")
@click.argument("finding_id")
@click.pass_context
def cmd_track_mitigate(ctx: click.Context, finding_id: str) -> None:
    """Mark an open finding as mitigated."""
    ws = _workspace(ctx)
    with ws.lock():
        store = ws.load_store()
        tracking.mitigate_finding(store, finding_id)
        ws.append_events(tracking.mitigation_events(finding_id))
        click.echo(f"Mitigated {finding_id}")


@track_group.command("rtp")
@click.pass_context
def cmd_track_rtp(ctx: click.Context) -> None:
    """Print the risk treatment plan, highest severity first."""
    ws = _workspace(ctx)
    with ws.lock():
        store = ws.load_store()
        plan = build_rtp(store)
        if not plan.findings:
            click.echo("No findings recorded.")
            return
        rows = [
            [f.finding_id, f.severity.label, str(f.control_id), f.state.value,
             f.recorded_in_sprint, f.description]
            for f in plan.findings
        ]
        click.echo(_table(["Finding", "Severity", "Control", "State", "Sprint", "Description"], rows))


@track_group.command("gate")
@click.option("--appetite", type=_SEVERITY_CHOICE, default=None,
              help="Risk appetite; defaults to the workspace configuration.")
@click.option("--ato", is_flag=True, help="Report an Authority to Operate override.")
@click.option("--json", "as_json", is_flag=True, help="Print the machine-readable decision.")
@click.pass_context
def cmd_track_gate(ctx: click.Context, appetite: str | None, ato: bool, as_json: bool) -> None:
    """Decide go-live against the risk appetite; exits 3 when blocked."""
    ws = _workspace(ctx)
    with ws.lock():
        store = ws.load_store()
        config = ws.load_config()
        level = Severity.from_label(appetite) if appetite else config.default_appetite
        decision = golive_gate(store, level, ato)
    if as_json:
        click.echo(gate_to_json(decision), nl=False)
    else:
        if decision.verdict is GateVerdict.ATO_GRANTED:
            click.echo(f"WARNING: Authority to Operate granted with "
                       f"{_counted(len(decision.blocking), 'open finding')} at or above appetite",
                       err=True)
        click.echo(f"{decision.verdict.value.upper()} (appetite {decision.appetite.label})")
        if decision.blocking:
            rows = [
                [f.finding_id, f.severity.label, str(f.control_id), f.description]
                for f in decision.blocking
            ]
            click.echo(_table(["Finding", "Severity", "Control", "Description"], rows))
    if decision.verdict is GateVerdict.BLOCKED:
        ctx.exit(EXIT_BLOCKED)


@track_group.command("carry-over")
@click.argument("next_sprint")
@click.pass_context
def cmd_track_carry_over(ctx: click.Context, next_sprint: str) -> None:
    """Select everything from the current scope that has not passed yet."""
    ws = _workspace(ctx)
    with ws.lock():
        if not ws.has_scope():
            raise ScopeforgeError("no scope generated yet; nothing to carry over")
        catalog = _require_catalog(ws)
        prev_scope = ws.load_scope()
        store = ws.load_store()
        carried = carry_over(prev_scope, store, next_sprint)
        # rebuild through the mutators so stale references surface as errors
        state = new_selection(carried.project_id, catalog)
        for key in carried.sections:
            state = set_section_required(state, key, True)
        for cid in carried.controls:
            state = set_control_required(state, cid, True)
        ws.save_selection(state)
        click.echo(f"Carried {_counted(len(carried.controls), 'control')} into the "
                   f"selection for sprint {next_sprint}")


def main(argv: list[str] | None = None) -> int:
    """Entry point with outcome-class exit codes."""
    try:
        # non-standalone mode returns the code given to ctx.exit()
        result = cli.main(args=argv, standalone_mode=False)
        if isinstance(result, int):
            return result
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USAGE
    except LockTimeout as exc:
        click.echo(f"error: workspace is locked by another process ({exc})", err=True)
        return EXIT_DOMAIN
    except ScopeforgeError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
