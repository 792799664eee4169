import typer
from rich import print as rprint
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from probelb.commands.common import EXIT_USAGE, fail
from probelb.config.settings import settings
from probelb.core.verification import SUITES, SuiteReport, run_suite
from probelb.errors import VerificationError

console: Console = Console()


def verify_command(
    suite: str = typer.Option("all", "--suite", "-s", help=f"One of {', '.join(SUITES)}, or all"),
    quick: bool = typer.Option(False, "--quick", help="Smaller samples and shorter simulations"),
) -> None:
    """Run numerical verification suites; exits 0 only if every check passes."""
    try:
        reports = run_suite(suite, quick=quick, seed=settings.seed or 0)
    except VerificationError as e:
        fail(e)

    failed: int = 0
    for report in reports:
        console.print(_render(report))
        failed += sum(1 for c in report.checks if not c.passed)

    if failed:
        rprint(f"[red]✗ {failed} check(s) failed[/red]")
        raise typer.Exit(EXIT_USAGE)
    rprint(f"[green]✓ All checks passed ({sum(len(r.checks) for r in reports)} checks)[/green]")


def _render(report: SuiteReport) -> Table:
    status = "[green]passed[/green]" if report.passed else "[red]failed[/red]"
    table: Table = Table(title=f"Suite {report.suite}: {status} in {report.elapsed:.1f}s")
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Measured", style="yellow")
    table.add_column("Threshold", style="yellow")
    table.add_column("Details", style="dim")

    for check in report.checks:
        result = "[green]✓[/green]" if check.passed else "[red]✗[/red]"
        table.add_row(escape(check.name), result, f"{check.measured:.4g}", f"{check.threshold:.4g}", escape(check.detail))
    return table
