from __future__ import annotations

import pytest

from promptpad.config import Config, load_config
from promptpad.errors import ConfigError


def test_defaults_without_file_or_env():
    config = load_config(env={})
    assert config.port == 8642
    assert config.default_k == 30
    assert config.journal_dir is None


def test_toml_file_sets_values(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text('port = 9000\njournal_dir = "data"\ndefault_k = 5\n')
    config = load_config(path, env={})
    assert config.port == 9000
    assert config.journal_dir == "data"
    assert config.default_k == 5


def test_env_overrides_file(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("port = 9000\n")
    config = load_config(path, env={"PH_PORT": "9100", "PH_DEFAULT_K": "2", "PH_JOURNAL_DIR": "j"})
    assert config.port == 9100
    assert config.default_k == 2
    assert config.journal_dir == "j"


def test_provider_settings_flow_through():
    config = load_config(env={"PH_PROVIDER_URL": "http://llm.internal/v1", "PH_PROVIDER_KEY_ENV": "LLM_KEY"})
    assert config.provider_url == "http://llm.internal/v1"
    assert config.provider_key_env == "LLM_KEY"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("prot = 1\n")
    with pytest.raises(ConfigError):
        load_config(path, env={})


def test_bad_port_rejected():
    with pytest.raises(ConfigError):
        load_config(env={"PH_PORT": "not-a-number"})
    with pytest.raises(ConfigError):
        load_config(env={"PH_PORT": "70000"})


def test_bad_k_rejected():
    with pytest.raises(ConfigError):
        load_config(env={"PH_DEFAULT_K": "0"})


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml", env={})
