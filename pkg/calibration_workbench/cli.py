"""Command-line interface for the calibration workbench."""

import sys
from typing import List, Optional

import click
from rich.console import Console
from rich.table import Table

from .coframe_calculus import CoframeError
from .config import Config, ConfigError
from .deformation_solver import (
    KINDS,
    DeformationError,
    associative_system,
    cayley_system,
    coassociative_system,
    embedding,
    export_system,
    nk_sas_system,
    sas_system,
)
from .presets import export_preset, preset, preset_names
from .scenarios import SCENARIOS, ScenarioError, ScenarioReport, run, run_all, scenario_names, write_report

console = Console()

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def config_options(command):
    """Flags shared by the scenario commands."""
    options = [
        click.option('--config', 'config_file', type=str, default=None, help='YAML configuration file'),
        click.option('--seed', type=int, default=None, help=f'Global random seed (default: {Config.DEFAULT_SEED})'),
        click.option('--tol', type=float, default=None, help=f'Optimizer tolerance (default: {Config.DEFAULT_TOL})'),
        click.option('--restarts', type=int, default=None,
                     help=f'Comass restarts (default: {Config.DEFAULT_RESTARTS})'),
        click.option('--fd-step', type=float, default=None,
                     help=f'Chart finite-difference step (default: {Config.DEFAULT_FD_STEP})'),
        click.option('--workers', type=int, default=None,
                     help=f'Worker processes (default: {Config.DEFAULT_WORKERS})'),
        click.option('--report', type=str, default=None, help='Write line-delimited JSON records to this path'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_config(config_file: Optional[str], **overrides) -> Config:
    """
    Config from an optional YAML file; flags win over file values.

    Raises:
        ConfigError: If the file or a value is invalid
    """
    if config_file:
        return Config.from_file(config_file, **overrides)
    return Config(**overrides)


def _load_config(config_file, **overrides) -> Config:
    try:
        return build_config(config_file, **overrides)
    except ConfigError as e:
        console.print(f"[red]Configuration error: {e}[/red]")
        sys.exit(EXIT_CONFIG)


def print_summary(reports: List[ScenarioReport]):
    table = Table(title="Summary", padding=(0, 2))
    table.add_column("Scenario", style="cyan")
    table.add_column("Result")
    table.add_column("Measurements", justify="right")
    table.add_column("Failures", justify="right")
    table.add_column("Time (s)", justify="right")
    for report in reports:
        result = "[green]✓ pass[/green]" if report.passed else "[red]✗ fail[/red]"
        table.add_row(report.scenario, result, str(len(report.measurements)), str(len(report.failures)),
                      f"{report.wall_time:.2f}")
    console.print(table)


def print_failures(report: ScenarioReport):
    if report.error:
        console.print(f"[red]{report.scenario}: {report.error}[/red]")
    for m in report.failures:
        console.print(f"[red]✗ {report.scenario}: {m.name} = {m.value} (expected {m.expected}, "
                      f"tolerance {m.tolerance}, {m.provenance})[/red]")


def _finish(reports: List[ScenarioReport], config: Config):
    for report in reports:
        print_failures(report)
    print_summary(reports)
    if config.report_path:
        write_report(reports, config.report_path)
        console.print(f"Report written to {config.report_path}")
    sys.exit(EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL)


@click.group()
def main():
    """Verify generalized calibrations, their deformation systems and hermitian rescalings."""


@main.command('run')
@click.argument('scenario')
@config_options
def run_command(scenario, config_file, seed, tol, restarts, fd_step, workers, report):
    """Run one scenario."""
    config = _load_config(config_file, seed=seed, tol=tol, restarts=restarts, fd_step=fd_step,
                          workers=workers, report=report)
    console.print(f"\n[bold cyan]{scenario}[/bold cyan] (seed {config.seed})\n")
    try:
        result = run(scenario, config)
    except ScenarioError as e:
        console.print(f"[red]{e}[/red]")
        sys.exit(EXIT_CONFIG)
    _finish([result], config)


@main.command('run-all')
@config_options
def run_all_command(config_file, seed, tol, restarts, fd_step, workers, report):
    """Run every registered scenario."""
    config = _load_config(config_file, seed=seed, tol=tol, restarts=restarts, fd_step=fd_step,
                          workers=workers, report=report)
    console.print(f"\n[bold cyan]Calibration workbench[/bold cyan]: {len(SCENARIOS)} scenarios, "
                  f"seed {config.seed}, {config.workers} worker(s)\n")
    _finish(run_all(config), config)


@main.command('list')
def list_command():
    """List scenarios and presets."""
    table = Table(title="Scenarios", padding=(0, 2))
    table.add_column("Id", style="cyan")
    table.add_column("Description")
    for name in scenario_names():
        table.add_row(name, SCENARIOS[name].description)
    console.print(table)

    presets = Table(title="Presets", padding=(0, 2))
    presets.add_column("Name", style="cyan")
    presets.add_column("Description")
    for name in preset_names():
        presets.add_row(name, preset(name).description)
    console.print(presets)


@main.command('export-preset')
@click.argument('name')
def export_preset_command(name):
    """Print a preset as YAML."""
    try:
        click.echo(export_preset(name), nl=False)
    except CoframeError as e:
        console.print(f"[red]{e}[/red]")
        sys.exit(EXIT_CONFIG)


@main.command('export-system')
@click.argument('preset_name')
@click.argument('kind', type=click.Choice(KINDS))
@click.option('--encoding', type=str, default=None, help='Alternative encoding ("trace" for sas, "form" for coassociative)')
@click.option('--orientation', type=click.Choice(['1', '-1']), default='1', help='J orientation for nk-sas')
def export_system_command(preset_name, kind, encoding, orientation):
    """Print the invariant deformation system of a preset sub-frame as a plain matrix."""
    try:
        emb = embedding(preset_name, kind)
        if kind == "sas":
            system = sas_system(emb, encoding or "lie")
        elif kind == "nk-sas":
            system = nk_sas_system(emb, int(orientation))
        elif kind == "associative":
            system = associative_system(emb)
        elif kind == "coassociative":
            system = coassociative_system(emb, encoding or "vector")
        else:
            system = cayley_system(emb)
    except DeformationError as e:
        console.print(f"[red]{e}[/red]")
        sys.exit(EXIT_CONFIG)
    click.echo(export_system(system))


if __name__ == '__main__':
    main()
