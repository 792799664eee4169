from pathlib import Path
from typing import Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="PROBELB_", env_file=".env", env_file_encoding="utf-8")

    config_path: str = "probelb.json"
    output_dir: Path = Path("out")
    seed: Optional[int] = None

    threads: int = 1
    executor: Literal["local", "celery"] = "local"

    celery_broker_url: str = "redis://localhost:6379/0"
    celery_result_backend: str = "redis://localhost:6379/0"
    celery_always_eager: bool = False
    task_timeout: int = 30 * 60

    log_level: str = "WARNING"


settings = Settings()
