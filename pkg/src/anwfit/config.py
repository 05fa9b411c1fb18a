"""Environment settings and CLI config files."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml
from dotenv import dotenv_values

from .errors import InvalidConfigError
from .kernels import KernelFamily

DEFAULT_OUTPUT_DIR = "./anwfit-out"

# config-file keys that differ from the click parameter names
_KEY_ALIASES = {"lambda": "lam", "m": "steps"}


def configure_logging(settings: Settings | None = None):
    settings = settings or Settings.from_env()
    logging.basicConfig(level=settings.log_level)


@dataclass(frozen=True)
class Settings:
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    production: bool = False
    kernel: KernelFamily = KernelFamily.GAUSSIAN
    grid_size: int = 1001
    folds: int = 5

    @property
    def log_level(self) -> int:
        return logging.WARNING if self.production else logging.INFO

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> Settings:
        env = os.environ if environ is None else environ
        try:
            settings = cls(
                output_dir=Path(env.get("ANWFIT_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR),
                production=bool(env.get("RUNNING_IN_PRODUCTION")),
                kernel=KernelFamily.parse(env.get("ANWFIT_DEFAULT_KERNEL") or KernelFamily.GAUSSIAN),
                grid_size=int(env.get("ANWFIT_GRID_SIZE") or 1001),
                folds=int(env.get("ANWFIT_FOLDS") or 5),
            )
        except ValueError as exc:
            raise InvalidConfigError(f"bad environment setting: {exc}") from None
        if settings.grid_size < 3:
            raise InvalidConfigError("ANWFIT_GRID_SIZE must be at least 3")
        if settings.folds < 2:
            raise InvalidConfigError("ANWFIT_FOLDS must be at least 2")
        return settings


def normalize_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_").lower()
    return _KEY_ALIASES.get(key, key)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """``key=value`` file (dotenv syntax) or a YAML mapping, keyed by CLI option name."""
    path = Path(path)
    if not path.is_file():
        raise InvalidConfigError(f"config file {path} does not exist")
    if path.suffix.lower() in (".yaml", ".yml"):
        with path.open(encoding="utf-8") as handle:
            values = yaml.safe_load(handle) or {}
        if not isinstance(values, dict):
            raise InvalidConfigError(f"{path}: expected a mapping at the top level")
    else:
        values = dotenv_values(path)
    return {normalize_key(str(key)): value for key, value in values.items() if value is not None}
