from pathlib import Path
from typing import Literal, Optional

import typer
from pydantic import ValidationError
from rich import print as rprint
from rich.console import Console
from rich.table import Table

from probelb.commands.common import EXIT_UNSTABLE, err_console, fail, load_experiment, print_record, worker_count
from probelb.config.settings import settings
from probelb.core.analytic import CostBreakdown, DispatchRule, total_cost
from probelb.core.design import asymptotic_report, sigma_star
from probelb.core.figures import preset_config, sweep as run_sweep, write_sweep_csv
from probelb.core.optimize import OptimumPoint, min_cost_over_cutoff, min_efficiency_over_sigma
from probelb.errors import ConfigurationError, InfeasibleError, UnstableSystemError
from probelb.models.config import ExperimentConfig, SystemConfig
from probelb.utils.plotting import save_line_plot

console: Console = Console()


def eval_command(
    cutoff: float = typer.Option(..., "--c", help="Cutoff server c in [0, N]"),
    sigma: float = typer.Option(0.0, "--sigma", help="Testing time"),
) -> None:
    """Evaluate D(sigma) for one cutoff and print the cost breakdown as JSON."""
    experiment: ExperimentConfig = load_experiment()
    cfg: SystemConfig = experiment.system

    try:
        if sigma < 0.0:
            raise ConfigurationError(f"testing time must be non-negative (got {sigma})")
        breakdown: CostBreakdown = total_cost(cfg, DispatchRule.for_config(cfg, cutoff), sigma)
    except (ConfigurationError, ValidationError) as e:
        fail(e)

    print_record({"c": cutoff, "sigma": sigma, **breakdown.model_dump()})
    if not breakdown.stable:
        conditions = ", ".join(breakdown.unstable_conditions())
        err_console.print(f"[red]{conditions.replace('_', ' ')} unstable[/red]")
        raise typer.Exit(EXIT_UNSTABLE)


def optimize_command(
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Testing time for the cutoff search (default: sigma*)"),
    points: Optional[int] = typer.Option(None, "--points", help="Sigma-grid points (default: from the config)"),
) -> None:
    """Optimal cutoff at one testing time and the best testing time over the sigma grid."""
    experiment: ExperimentConfig = load_experiment()
    cfg: SystemConfig = experiment.system

    try:
        target: float = sigma_star(cfg, experiment.design.gamma) if sigma is None else sigma
        at_target: OptimumPoint = min_cost_over_cutoff(cfg, target)
        best: OptimumPoint = min_efficiency_over_sigma(
            cfg, experiment.sigma_max(), points or experiment.sweep.points, workers=worker_count()
        )
        cutoff_at_best: OptimumPoint = min_cost_over_cutoff(cfg, best.argmin)
    except (ConfigurationError, InfeasibleError, UnstableSystemError) as e:
        fail(e)

    report = asymptotic_report(cfg, experiment.design.gamma, experiment.theta())

    table: Table = Table(title="Optimisation")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Details", style="yellow")

    table.add_row("c_opt(sigma)", f"{at_target.argmin:.6g}", f"sigma={target:.6g} ({at_target.method})")
    table.add_row("D_opt(sigma)", f"{at_target.value:.6g}", "")
    table.add_row("sigma_opt", f"{best.argmin:.6g}", f"{best.method}, grid step {best.grid_step:.3g}")
    table.add_row("c_opt(sigma_opt)", f"{cutoff_at_best.argmin:.6g}", "")
    table.add_row("E(sigma_opt)", f"{best.value:.6g}", "below 1 means testing pays off")
    table.add_row("efficiency floor", f"{report.efficiency_floor:.6g}", "E[X]^2 / E[X^2]")
    table.add_row("R*", f"{report.r_star:.6g}", f"R_down={report.r_down:.6g}, pooled={report.pooled:.6g}")
    if report.nfs_derivative is not None:
        table.add_row("dD/dsigma at 0", f"{report.nfs_derivative:.6g}", f"decreasing: {report.nfs_condition_holds}")
    if report.prop3_limit is not None:
        table.add_row("heavy-tail limit", f"{report.prop3_limit:.6g}", str(report.prop3_regime))

    console.print(table)


def sweep_command(
    preset: Optional[str] = typer.Option(None, "--preset", help="figure1 or figure2 instead of the config file"),
    workload: str = typer.Option("p50", "--workload", help="figure2 workload: p50, p20 or p80"),
    n_servers: int = typer.Option(100, "--N", help="Number of servers for a preset"),
    rho: float = typer.Option(0.8, "--rho", help="Network load for a preset"),
    beta: float = typer.Option(0.5, "--beta", help="figure1 tail exponent"),
    x_M: float = typer.Option(1e5, "--xM", help="figure1 large job size"),
    points: Optional[int] = typer.Option(None, "--points", help="Sigma-grid points"),
    gamma: float = typer.Option(10.0, "--gamma", help="sigma* design parameter"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="CSV path (default: <out>/sweep.csv)"),
    svg: bool = typer.Option(False, "--svg", help="Also write an efficiency plot next to the CSV"),
) -> None:
    """Optimal cutoff, cost and efficiency over a sigma grid, written as CSV."""
    sigma_max: Optional[float] = None
    spacing: Literal["hybrid", "linear", "geometric"] = "hybrid"
    csv_path: Optional[Path] = output
    svg_path: Optional[Path] = None

    try:
        if preset is not None:
            if preset not in ("figure1", "figure2"):
                raise ConfigurationError(f"unknown preset '{preset}' (choose figure1 or figure2)")
            cfg: SystemConfig = preset_config(preset, n_servers=n_servers, rho=rho, workload=workload, beta=beta, x_M=x_M)
            grid_points: int = 400 if points is None else points
        else:
            experiment: ExperimentConfig = load_experiment()
            cfg = experiment.system
            gamma = experiment.design.gamma
            sigma_max = experiment.sweep.sigma_max
            spacing = experiment.sweep.spacing
            grid_points = experiment.sweep.points if points is None else points
            if csv_path is None and experiment.output.csv:
                csv_path = Path(experiment.output.csv)
            if experiment.output.svg:
                svg_path = Path(experiment.output.svg)

        result = run_sweep(cfg, sigma_max=sigma_max, points=grid_points, gamma=gamma, spacing=spacing, workers=worker_count())
        path: Path = write_sweep_csv(
            result, csv_path or settings.output_dir / "sweep.csv", extra={"preset": preset or "config"}
        )
        if svg and svg_path is None:
            svg_path = path.with_suffix(".svg")
        if svg_path is not None:
            save_line_plot(
                svg_path,
                {"E": (result.sigma, result.efficiency)},
                title=f"N={cfg.n_servers}, rho={cfg.rho:.3g}",
                xlabel="testing time sigma",
                ylabel="efficiency E",
                log_x=True,
                reference=1.0,
            )
    except (ConfigurationError, InfeasibleError, UnstableSystemError, ValidationError, OSError) as e:
        fail(e)

    rprint(f"[green]✓ Sweep written: {path}[/green]")
    rprint(f"  - grid points: {len(result.sigma)}")
    rprint(f"  - sigma*: {result.sigma_star:.6g}, E(sigma*) = {result.efficiency_at_sigma_star():.6g}")
    rprint(f"  - min E over grid: {result.min_efficiency():.6g}")
