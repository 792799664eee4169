import json
from pathlib import Path

import pytest

from probelb.config.settings import settings
from probelb.core.config_manager import ConfigManager
from probelb.core.verification import worked_example
from probelb.models.config import SystemConfig
from probelb.models.profile import ProfileFamily


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """Every test starts from default settings and writes below its own tmp dir."""
    for name in type(settings).model_fields:
        monkeypatch.setattr(settings, name, getattr(settings, name))
    monkeypatch.setattr(settings, "config_path", str(tmp_path / "probelb.json"))
    monkeypatch.setattr(settings, "output_dir", tmp_path / "out")
    monkeypatch.setattr(settings, "executor", "local")
    monkeypatch.setattr(settings, "threads", 1)
    monkeypatch.setattr(settings, "seed", None)


@pytest.fixture
def pk_example() -> SystemConfig:
    return worked_example()


@pytest.fixture
def ic_example() -> SystemConfig:
    return worked_example(ProfileFamily.INDEPENDENT_CONSTANT)


@pytest.fixture
def es_example() -> SystemConfig:
    return worked_example(ProfileFamily.EXPONENTIAL_SATURATING)


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    """The default configuration written to disk."""
    manager = ConfigManager(str(tmp_path / "probelb.json"))
    manager.save(manager.create_default_config())
    return manager.config_path


@pytest.fixture
def write_config(tmp_path: Path):
    def _write(data: dict, name: str = "custom.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
