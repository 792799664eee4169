import json
import math
from typing import Any, Dict, NoReturn, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape

from probelb.config.settings import settings
from probelb.core.config_manager import ConfigManager, describe_validation_error
from probelb.errors import ConfigurationError, InfeasibleError, SimulationError, UnstableSystemError, VerificationError
from probelb.models.config import ExperimentConfig

EXIT_USAGE: int = 1
EXIT_UNSTABLE: int = 2

err_console: Console = Console(stderr=True)


def load_experiment(config_manager: Optional[ConfigManager] = None) -> ExperimentConfig:
    config_manager = config_manager or ConfigManager()
    try:
        return config_manager.get_config()
    except FileNotFoundError:
        err_console.print("[red]No configuration found. Run 'probelb config init' first.[/red]")
        raise typer.Exit(EXIT_USAGE)
    except ConfigurationError as e:
        fail(e)


def fail(error: Exception) -> NoReturn:
    """Print the error and exit with 2 for instability, 1 for everything else."""
    if isinstance(error, ValidationError):
        err_console.print(f"[red]Invalid parameters: {escape(describe_validation_error(error))}[/red]")
        raise typer.Exit(EXIT_USAGE)
    if isinstance(error, UnstableSystemError):
        err_console.print(f"[red]{escape(str(error))}[/red]")
        raise typer.Exit(EXIT_UNSTABLE)
    if isinstance(error, (ConfigurationError, InfeasibleError, SimulationError, VerificationError, OSError)):
        err_console.print(f"[red]{escape(str(error))}[/red]")
        raise typer.Exit(EXIT_USAGE)
    raise error


def json_safe(value: Any) -> Any:
    """inf / nan become the strings "inf", "-inf", "nan" so the record stays valid JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        if math.isnan(value):
            return "nan"
        return "inf" if value > 0 else "-inf"
    return value


def print_record(record: Dict[str, Any]) -> None:
    typer.echo(json.dumps({k: json_safe(v) for k, v in record.items()}))


def worker_count() -> int:
    return max(settings.threads, 1)
