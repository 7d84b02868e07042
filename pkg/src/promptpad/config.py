"""Service/CLI configuration from a TOML file and PH_* environment variables."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_PORT = 8642
DEFAULT_K = 30

ENV_PREFIX = "PH_"


@dataclass
class Config:
    port: int = DEFAULT_PORT
    journal_dir: str | None = None
    provider_url: str | None = None
    provider_key_env: str | None = None
    default_k: int = DEFAULT_K

    @property
    def journal_path(self) -> Path | None:
        return Path(self.journal_dir) if self.journal_dir else None


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> Config:
    """Build a Config from an optional TOML file, then apply PH_* overrides.

    Recognized keys/variables: PH_PORT, PH_JOURNAL_DIR, PH_PROVIDER_URL,
    PH_PROVIDER_KEY_ENV, PH_DEFAULT_K (TOML keys are the lowercase names
    without the prefix).
    """
    env = os.environ if env is None else env
    config = Config()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        for key in data:
            if key not in ("port", "journal_dir", "provider_url", "provider_key_env", "default_k"):
                raise ConfigError(f"unknown config key {key!r}")
        config.port = data.get("port", config.port)
        config.journal_dir = data.get("journal_dir", config.journal_dir)
        config.provider_url = data.get("provider_url", config.provider_url)
        config.provider_key_env = data.get("provider_key_env", config.provider_key_env)
        config.default_k = data.get("default_k", config.default_k)

    if env.get("PH_PORT"):
        config.port = _int(env["PH_PORT"], "PH_PORT")
    if env.get("PH_JOURNAL_DIR"):
        config.journal_dir = env["PH_JOURNAL_DIR"]
    if env.get("PH_PROVIDER_URL"):
        config.provider_url = env["PH_PROVIDER_URL"]
    if env.get("PH_PROVIDER_KEY_ENV"):
        config.provider_key_env = env["PH_PROVIDER_KEY_ENV"]
    if env.get("PH_DEFAULT_K"):
        config.default_k = _int(env["PH_DEFAULT_K"], "PH_DEFAULT_K")

    if config.port < 1 or config.port > 65535:
        raise ConfigError(f"port {config.port} outside 1..65535")
    if config.default_k < 1:
        raise ConfigError(f"default_k must be >= 1, got {config.default_k}")
    return config


def _int(value: str, name: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {value!r}") from exc
