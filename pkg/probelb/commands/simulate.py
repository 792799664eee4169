from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich import print as rprint
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from probelb.commands.common import fail, load_experiment, worker_count
from probelb.config.settings import settings
from probelb.core.analytic import CostBreakdown, DispatchRule, total_cost
from probelb.core.optimize import min_cost_over_cutoff
from probelb.core.simulation import Estimate, SimReport, simulate
from probelb.errors import ConfigurationError, InfeasibleError, SimulationError, UnstableSystemError
from probelb.models.config import ExperimentConfig, SystemConfig

console: Console = Console()


def _estimate(e: Estimate) -> str:
    return f"{e.mean:.6g} ± {e.half_width:.3g}"


def simulate_command(
    cutoff: Optional[float] = typer.Option(None, "--c", help="Cutoff server (default: optimal at sigma)"),
    sigma: float = typer.Option(0.0, "--sigma", help="Testing time"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Jobs per replication"),
    warmup: Optional[int] = typer.Option(None, "--warmup", help="Jobs discarded per replication (default 10%)"),
    replications: Optional[int] = typer.Option(None, "--replications", "-r", help="Independent replications"),
    event_log: Optional[Path] = typer.Option(None, "--event-log", help="Write the per-job log of replication 0"),
    per_server: bool = typer.Option(False, "--per-server", help="Show per-server statistics"),
) -> None:
    """Discrete-event simulation of the testing scheduler and the N servers."""
    experiment: ExperimentConfig = load_experiment()
    cfg: SystemConfig = experiment.system
    spec = experiment.sim
    seed: int = settings.seed if settings.seed is not None else spec.seed
    n_jobs: int = spec.jobs if jobs is None else jobs
    n_warmup: Optional[int] = warmup if warmup is not None else (spec.warmup if jobs is None else None)

    try:
        if sigma < 0.0:
            raise ConfigurationError(f"testing time must be non-negative (got {sigma})")
        if cutoff is None:
            optimum = min_cost_over_cutoff(cfg, sigma)
            if not optimum.feasible:
                raise InfeasibleError(f"no stable cutoff exists at sigma={sigma:g}")
            cutoff = optimum.argmin
        c: float = cutoff
        rule: DispatchRule = DispatchRule.for_config(cfg, c)
        analytic: CostBreakdown = total_cost(cfg, rule, sigma)

        with Progress(
            SpinnerColumn(), TextColumn("[bold blue]Simulating..."), console=console, transient=True
        ) as progress:
            progress.add_task("simulate", total=None)
            report: SimReport = simulate(
                cfg,
                rule,
                sigma,
                jobs=n_jobs,
                warmup=n_warmup,
                seed=seed,
                replications=spec.replications if replications is None else replications,
                streams=worker_count(),
                event_log=event_log,
            )
    except (ConfigurationError, InfeasibleError, SimulationError, UnstableSystemError, ValidationError, OSError) as e:
        fail(e)

    table: Table = Table(title=f"Simulation (N={cfg.n_servers}, c={c:.6g}, sigma={sigma:.6g})")
    table.add_column("Quantity", style="cyan")
    table.add_column("Simulated (95% CI)", style="green")
    table.add_column("Analytic", style="yellow")

    table.add_row("scheduler sojourn", _estimate(report.mean_scheduler_sojourn), f"{analytic.scheduler_sojourn:.6g}")
    table.add_row("servers waiting", _estimate(report.mean_servers_waiting), f"{analytic.servers_waiting:.6g}")
    table.add_row("total cost D", _estimate(report.mean_total), f"{analytic.total:.6g}")
    table.add_row(
        "P(predicted short)",
        _estimate(report.empirical_prediction_marginal),
        f"{cfg.profile.evaluate(sigma).prob_pred_small:.6g}",
    )
    console.print(table)

    if per_server:
        servers: Table = Table(title="Per server")
        for column in ("Server", "Utilisation", "Mean in system", "lambda x sojourn", "Short jobs", "Long jobs"):
            servers.add_column(column)
        for i in range(cfg.n_servers):
            servers.add_row(
                str(i + 1),
                f"{report.per_server_utilization[i]:.4f}",
                f"{report.per_server_mean_in_system[i]:.4g}",
                f"{report.per_server_little_product[i]:.4g}",
                str(report.per_server_short_jobs[i]),
                str(report.per_server_long_jobs[i]),
            )
        console.print(servers)

    rprint(f"[dim]{report.replications} replications, {report.jobs_completed} jobs measured, seed {report.seed}[/dim]")
    if event_log is not None:
        rprint(f"[green]✓ Event log written: {event_log}[/green]")
