#!/usr/bin/env python3

import logging
import sys
from pathlib import Path
from typing import Optional

import click
import typer
from rich.console import Console
from rich.logging import RichHandler

from probelb import __version__
from probelb.commands import analysis, config, figures, simulate, verify
from probelb.commands.common import EXIT_USAGE
from probelb.config.settings import settings

console: Console = Console()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

app: typer.Typer = typer.Typer(
    name="probelb", help="Load balancing with job-size testing: analysis, design and simulation", no_args_is_help=True
)

app.add_typer(config.app, name="config")
app.command(name="eval")(analysis.eval_command)
app.command(name="optimize")(analysis.optimize_command)
app.command(name="sweep")(analysis.sweep_command)
app.command(name="simulate")(simulate.simulate_command)
app.command(name="figures")(figures.figures_command)
app.command(name="verify")(verify.verify_command)


@app.callback()
def main(
    config_file: Optional[str] = typer.Option(
        None, "--config", "-c", help="Configuration file path (default: probelb.json in current directory)"
    ),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory for CSV and SVG files"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed for simulations and randomized checks"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker processes for sweeps and replications"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
) -> None:
    if config_file:
        settings.config_path = config_file
    if out is not None:
        settings.output_dir = out
    if seed is not None:
        settings.seed = seed
    if threads is not None:
        settings.threads = threads
    if log_level:
        if log_level.upper() not in LOG_LEVELS:
            raise typer.BadParameter(f"choose one of {', '.join(LOG_LEVELS)}", param_hint="--log-level")
        settings.log_level = log_level.upper()

    logging.basicConfig(
        level=settings.log_level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@app.command()
def version() -> None:
    console.print(f"[green]probelb v{__version__}[/green]")
    console.print("Load balancing with job-size testing")


def run() -> None:
    """Console entry point; usage errors exit with 1 so that 2 stays reserved for instability."""
    try:
        code = app(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    run()
