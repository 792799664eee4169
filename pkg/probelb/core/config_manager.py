import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError
from rich.console import Console

from probelb.config.settings import settings
from probelb.errors import ConfigurationError
from probelb.models.config import ExperimentConfig

console: Console = Console(stderr=True)


def get_global_config_path() -> str:
    return settings.config_path


def describe_validation_error(error: ValidationError) -> str:
    """One line per violated condition, prefixed with its field path."""
    lines: List[str] = []
    for item in error.errors():
        location: str = ".".join(str(part) for part in item["loc"]) or "config"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(describe_validation_error(e)) from e


class ConfigManager:
    def __init__(self, config_path: Optional[str] = None) -> None:
        if config_path:
            self.config_path: Path = Path(config_path)
        else:
            self.config_path = Path(get_global_config_path())
        self._config: Optional[ExperimentConfig] = None

    def load(self) -> ExperimentConfig:
        if not self.config_path.exists():
            console.print(f"[red]Configuration file {self.config_path} not found![/red]")
            console.print("[yellow]Run 'probelb config init' to create a default configuration.[/yellow]")
            raise FileNotFoundError(f"Configuration file {self.config_path} not found")

        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data: Dict[str, Any] = json.load(f)
        except json.JSONDecodeError as e:
            console.print(f"[red]Error parsing JSON configuration: {e}[/red]")
            raise ConfigurationError(f"{self.config_path}: invalid JSON ({e})") from e

        if not isinstance(data, dict):
            raise ConfigurationError(f"{self.config_path}: top level must be a JSON object")
        self._config = parse_config(data)
        return self._config

    def save(self, config: ExperimentConfig) -> None:
        try:
            with open(self.config_path, "w", encoding="utf-8") as f:
                json.dump(config.to_json_dict(), f, indent=2, sort_keys=True)
                f.write("\n")

            self._config = config
            console.print(f"[green]Configuration saved to {self.config_path}[/green]")
        except OSError as e:
            console.print(f"[red]Error saving configuration: {e}[/red]")
            raise

    def get_config(self) -> ExperimentConfig:
        if self._config is None:
            self._config = self.load()
        return self._config

    def create_default_config(self) -> ExperimentConfig:
        """The three-server worked example: sizes 1 and 10, perfect predictions, lambda = 0.1."""
        return parse_config(
            {
                "system": {
                    "n_servers": 3,
                    "lambda_per_server": 0.1,
                    "dist": {"x_m": 1.0, "x_M": 10.0, "p_small": 0.9},
                    "profile": {"family": "perfect_knowledge"},
                    "cost_fn": {"kind": "identity"},
                },
                "sweep": {"points": 400},
                "sim": {"jobs": 1_000_000, "replications": 20},
                "design": {"gamma": 10.0, "tau": 1.0},
            }
        )

    def validate(self) -> bool:
        try:
            config: ExperimentConfig = self.get_config()
        except (ConfigurationError, FileNotFoundError) as e:
            console.print(f"[red]Configuration validation failed: {e}[/red]")
            return False

        errors: List[str] = config.validate_config()
        if errors:
            console.print("[red]Configuration validation failed:[/red]")
            for error in errors:
                console.print(f"  [red]✗[/red] {error}")
            return False

        console.print("[green]✓ Configuration is valid[/green]")
        return True
