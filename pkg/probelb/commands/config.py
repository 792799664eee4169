from pathlib import Path

import typer
from rich import print as rprint
from rich.console import Console
from rich.syntax import Syntax
from rich.table import Table

from probelb.commands.common import EXIT_USAGE, load_experiment
from probelb.core.config_manager import ConfigManager
from probelb.models.config import ExperimentConfig

console: Console = Console()
app: typer.Typer = typer.Typer(help="Configuration management commands", no_args_is_help=True)


@app.command()
def init(force: bool = typer.Option(False, "--force", "-f", help="Overwrite existing configuration")) -> None:
    """Write the three-server worked example as a starting configuration."""
    config_manager: ConfigManager = ConfigManager()
    config_path: Path = config_manager.config_path

    if config_path.exists() and not force:
        rprint(f"[red]Configuration file '{config_path}' already exists![/red]")
        rprint("[yellow]Use --force to overwrite existing configuration.[/yellow]")
        raise typer.Exit(EXIT_USAGE)

    try:
        config: ExperimentConfig = config_manager.create_default_config()
        config_manager.save(config)
    except OSError as e:
        rprint(f"[red]Failed to initialize configuration: {e}[/red]")
        raise typer.Exit(EXIT_USAGE)

    rprint(f"[green]✓ Configuration initialized: {config_path}[/green]")
    rprint("\n[cyan]Created configuration with:[/cyan]")
    rprint(f"  - Servers: {config.system.n_servers}")
    rprint(f"  - Load rho: {config.system.rho:.4g}")
    rprint(f"  - Profile: {config.system.profile.family.value}")
    rprint("[yellow]Edit the configuration file to match your experiment.[/yellow]")


@app.command()
def show() -> None:
    config_manager: ConfigManager = ConfigManager()
    load_experiment(config_manager)

    rprint(f"[cyan]Configuration file:[/cyan] {config_manager.config_path}")
    content: str = config_manager.config_path.read_text(encoding="utf-8")
    console.print(Syntax(content, "json", theme="monokai", line_numbers=True))


@app.command()
def validate() -> None:
    config_manager: ConfigManager = ConfigManager()

    if not config_manager.validate():
        raise typer.Exit(EXIT_USAGE)

    config: ExperimentConfig = config_manager.get_config()
    system = config.system

    table: Table = Table(title="Configuration Summary")
    table.add_column("Section", style="cyan")
    table.add_column("Details", style="yellow")

    table.add_row("System", f"N={system.n_servers}, lambda={system.lambda_per_server:.6g}, rho={system.rho:.6g}")
    table.add_row(
        "Job sizes",
        f"x_m={system.dist.x_m:g}, x_M={system.dist.x_M:g}, p_small={system.dist.p_small:.6g}, E[X]={system.dist.mean():.6g}",
    )
    table.add_row("Profile", system.profile.family.value)
    table.add_row("Cost", system.cost_fn.kind if system.cost_fn.kind == "identity" else f"scaled x{system.cost_fn.kappa:g}")
    table.add_row("Sweep", f"{config.sweep.points} points up to sigma={config.sigma_max():.6g} ({config.sweep.spacing})")
    table.add_row("Simulation", f"{config.sim.replications} x {config.sim.jobs} jobs, seed {config.sim.seed}")
    table.add_row("Design", f"gamma={config.design.gamma:g}, tau={config.design.tau:g}")

    console.print(table)


@app.command()
def path() -> None:
    config_manager: ConfigManager = ConfigManager()
    rprint(f"[cyan]Configuration file:[/cyan] {config_manager.config_path.absolute()}")

    if config_manager.config_path.exists():
        rprint("[green]✓ File exists[/green]")
    else:
        rprint("[red]✗ File does not exist[/red]")
        rprint("[yellow]Run 'probelb config init' to create it.[/yellow]")
