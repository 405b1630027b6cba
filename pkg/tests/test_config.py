"""
Unit tests for the pipeline config schema and environment fallbacks.
"""
import json
from pathlib import Path

import pytest

from src.config import initialize_config
from src.config.pipeline import Conv1DHyper, build_pipeline_config, load_pipeline_config
from src.config.settings import validate_settings
from src.errors import ConfigError
from src.utils.env_utils import read_env_int, resolve_log_level, resolve_threads

EXAMPLE = Path(__file__).parent.parent / "config" / "pipeline.example.json"


@pytest.mark.unit
def test_defaults():
    """Test a minimal config takes every default."""
    config = build_pipeline_config({"version": 1})
    assert config.seed == 42 and config.k == 5
    assert config.models == ["logreg", "random_forest", "conv1d", "gcn"]
    assert config.split_ratios == (0.70, 0.10, 0.20)
    assert config.threads is None
    assert config.hyper_for("conv1d") == Conv1DHyper()


@pytest.mark.unit
@pytest.mark.parametrize("raw", [
    {},
    {"version": 2},
    {"version": 1, "colour": "red"},
    {"version": 1, "k": 1},
    {"version": 1, "models": []},
    {"version": 1, "models": ["svm"]},
    {"version": 1, "split_ratios": [0.5, 0.3, 0.1]},
    {"version": 1, "manifest": "m.json", "dataset": "d.csv"},
    {"version": 1, "logreg": {"lr": 0.0}},
    {"version": 1, "conv1d": {"architecture": [{"type": "dropout", "rate": 1.0}]}},
    {"version": 1, "selection": {"spans": ["gesture"]}},
])
def test_invalid_configs(raw):
    """Test schema violations surface as ConfigError."""
    with pytest.raises(ConfigError):
        build_pipeline_config(raw)


@pytest.mark.unit
def test_overrides_replace_file_values():
    """Test non-None overrides win and None leaves the file value."""
    config = build_pipeline_config({"version": 1, "seed": 1, "k": 4}, {"seed": 9, "k": None, "threads": 3})
    assert (config.seed, config.k, config.threads) == (9, 4, 3)


@pytest.mark.unit
def test_hyper_for_unknown_family():
    """Test unknown families are refused."""
    with pytest.raises(ConfigError):
        build_pipeline_config({"version": 1}).hyper_for("svm")


@pytest.mark.unit
def test_load_resolves_relative_paths(tmp_path):
    """Test file paths resolve against the config directory but overrides do not."""
    path = tmp_path / "conf" / "run.json"
    path.parent.mkdir()
    path.write_text(json.dumps({"version": 1, "manifest": "data/manifest.json"}), encoding="utf-8")
    config = load_pipeline_config(path)
    assert Path(config.manifest) == tmp_path / "conf" / "data" / "manifest.json"
    assert config.out_dir == "storage/results"
    overridden = load_pipeline_config(path, {"out_dir": "elsewhere"})
    assert overridden.out_dir == "elsewhere"


@pytest.mark.unit
def test_load_errors(tmp_path):
    """Test missing, malformed and non-object config files."""
    with pytest.raises(ConfigError, match="not found"):
        load_pipeline_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON"):
        load_pipeline_config(bad)
    bad.write_text("[1]", encoding="utf-8")
    with pytest.raises(ConfigError, match="object"):
        load_pipeline_config(bad)


@pytest.mark.unit
def test_example_config_is_valid():
    """Test the shipped example config."""
    config = load_pipeline_config(EXAMPLE)
    assert config.conv1d.architecture[-1].type == "sigmoid"
    assert config.explain.n_perm == 50


@pytest.mark.unit
def test_read_env_int(monkeypatch):
    """Test integer parsing with fallbacks."""
    monkeypatch.setenv("VERIDICT_TEST_INT", "7")
    assert read_env_int("VERIDICT_TEST_INT", default=1) == 7
    monkeypatch.setenv("VERIDICT_TEST_INT", "seven")
    assert read_env_int("VERIDICT_TEST_INT", default=1) == 1
    monkeypatch.setenv("VERIDICT_TEST_INT", "0")
    assert read_env_int("VERIDICT_TEST_INT", default=1, minimum=1) == 1
    monkeypatch.delenv("VERIDICT_TEST_INT")
    assert read_env_int("VERIDICT_TEST_INT") is None


@pytest.mark.unit
def test_thread_and_log_level_precedence(monkeypatch):
    """Test CLI, then config, then environment, then the default."""
    monkeypatch.setenv("VERIDICT_THREADS", "6")
    assert resolve_threads(2, 4) == 2
    assert resolve_threads(None, 4) == 4
    assert resolve_threads() == 6
    monkeypatch.delenv("VERIDICT_THREADS")
    assert resolve_threads() == 1
    monkeypatch.setenv("VERIDICT_LOG_LEVEL", "debug")
    assert resolve_log_level() == "DEBUG"
    assert resolve_log_level("warning") == "WARNING"


@pytest.mark.unit
def test_validate_settings(monkeypatch):
    """Test the settings snapshot reads environment fallbacks."""
    monkeypatch.setenv("VERIDICT_SEED", "11")
    monkeypatch.setenv("VERIDICT_THREADS", "-2")
    settings = validate_settings()
    assert settings["SEED"] == 11
    assert settings["THREADS"] == 1
    assert settings["FUSION"]["n_annotations"] == 39
    assert settings["MODEL_FORMAT"]["name"] == "veridict-model"
    assert initialize_config()["PIPELINE"].version == 1
