"""Command-line entry points."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import Config, load_config
from .errors import ParseError, PurposeGuardError
from .generator import (
    audit_policy,
    batch_generate,
    generate_policy,
    load_keyword_rules,
    load_library_facts,
    parse_descriptor,
)
from .policy import Provenance, parse_app_policy, validate_app_policy
from .simulator import run_scenario, run_scenario_interactive
from .taxonomy import DEFAULT_TAXONOMY


def _config(path: str | None, **overrides) -> Config:
    config = load_config(path)
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    return config


@click.group()
def main():
    """Purpose-aware permission manager for a simulated device."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--store", "store_path", type=click.Path(), default=None)
@click.option("--ui", "ui_dir", type=click.Path(), default=None, help="Static UI directory to mount at /ui.")
def serve(config_path, host, port, store_path, ui_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    config = _config(config_path, host=host, port=port, store_path=store_path)
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(config, ui_dir=ui_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None, help="Write the full report here.")
@click.option("--interactive", is_flag=True, help="Run on the real clock with worker threads.")
def run(scenario, config_path, out, interactive):
    """Run a scenario file and print its report."""
    config = _config(config_path)
    runner = run_scenario_interactive if interactive else run_scenario
    try:
        report = runner(scenario, config)
    except PurposeGuardError as exc:
        raise click.ClickException(str(exc))
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        click.echo(
            f"{report['name'] or scenario}: {len(report['decisions'])} decisions, "
            f"{len(report['notifications'])} notifications, "
            f"{len(report['errors'])} errors -> {out}"
        )
    else:
        click.echo(text)
    if report["errors"]:
        sys.exit(1)


@main.command()
@click.argument("descriptors", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Directory for generated policies.")
def generate(descriptors, out):
    """Generate policies for app descriptor files."""
    parsed = []
    for path in descriptors:
        try:
            parsed.append(parse_descriptor(Path(path).read_bytes()))
        except (ParseError, PurposeGuardError) as exc:
            raise click.ClickException(f"{path}: {exc}")
    written, errors = batch_generate(parsed, out, load_library_facts(), load_keyword_rules())
    for path in written:
        click.echo(f"wrote {path}")
    for error in errors:
        click.echo(f"error: {error}", err=True)
    if errors:
        sys.exit(1)


@main.command()
@click.argument("policy_file", type=click.Path(exists=True))
@click.argument("descriptor_file", type=click.Path(exists=True))
def audit(policy_file, descriptor_file):
    """Check a policy against what the app's code actually does."""
    try:
        descriptor = parse_descriptor(Path(descriptor_file).read_bytes())
        policy = parse_app_policy(
            Path(policy_file).read_bytes(), descriptor.app_id, Provenance.PRE_GENERATED
        )
    except (ParseError, PurposeGuardError) as exc:
        raise click.ClickException(str(exc))
    findings = audit_policy(policy, descriptor, load_library_facts())
    for finding in findings:
        click.echo(f"{finding.kind.value}: {finding.message}")
    if findings:
        sys.exit(1)
    click.echo("clean")


@main.command()
@click.argument("policy_file", type=click.Path(exists=True))
@click.option("--app", "app_id", default=None, help="App id; defaults to the file stem.")
@click.option("--declared", default=None, help="Comma-separated declared permissions to check coverage.")
@click.option("--lenient", is_flag=True, help="Parse the way generated policies are parsed.")
def validate(policy_file, app_id, declared, lenient):
    """Parse a policy file and report problems."""
    app_id = app_id or Path(policy_file).stem.removesuffix(".policy")
    provenance = Provenance.PRE_GENERATED if lenient else Provenance.DEVELOPER_EMBEDDED
    try:
        policy = parse_app_policy(Path(policy_file).read_bytes(), app_id, provenance)
    except ParseError as exc:
        raise click.ClickException(str(exc))
    for warning in policy.warnings:
        click.echo(f"warning: {warning}")
    click.echo(f"{len(policy.clauses)} clauses")
    if declared:
        perms = frozenset(DEFAULT_TAXONOMY.permission(n.strip()) for n in declared.split(","))
        violations = validate_app_policy(policy, perms)
        for violation in violations:
            click.echo(f"{violation.kind.value}: {violation.message}")
        if violations:
            sys.exit(1)
    click.echo("ok")


if __name__ == "__main__":
    main()
