from pathlib import Path
from typing import List, Optional

import typer
from rich import print as rprint
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn

from probelb.commands.common import fail, worker_count
from probelb.config.settings import settings
from probelb.core.figures import figure1, figure2
from probelb.errors import ConfigurationError, InfeasibleError

console: Console = Console()


def figures_command(
    which: int = typer.Option(2, "--which", help="Figure preset to reproduce: 1 or 2"),
    points: int = typer.Option(400, "--points", help="Sigma-grid points per curve"),
    out_dir: Optional[Path] = typer.Option(None, "--dir", help="Output directory (default: --out)"),
) -> None:
    """Reproduce the efficiency curves as one CSV per curve and one SVG per panel."""
    target: Path = out_dir or settings.output_dir

    try:
        if which not in (1, 2):
            raise ConfigurationError(f"--which must be 1 or 2 (got {which})")
        target.mkdir(parents=True, exist_ok=True)
        with Progress(
            SpinnerColumn(), TextColumn(f"[bold blue]Computing figure {which}..."), console=console, transient=True
        ) as progress:
            progress.add_task("figures", total=None)
            build = figure1 if which == 1 else figure2
            written: List[Path] = build(target, points=points, workers=worker_count())
    except (ConfigurationError, InfeasibleError, OSError) as e:
        fail(e)

    csvs = [p for p in written if p.suffix == ".csv"]
    svgs = [p for p in written if p.suffix == ".svg"]
    rprint(f"[green]✓ Figure {which}: {len(csvs)} CSV and {len(svgs)} SVG files in {target}[/green]")
    for path in svgs:
        rprint(f"  - {path.name}")
