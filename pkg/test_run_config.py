"""
Tests for RunConfig layering and the ordered thread map.
"""
import json

import pytest

from errors import ConfigError
from run_config import RunConfig, load_config, ordered_map


@pytest.fixture
def empty_env(tmp_path):
    return tmp_path / "missing.env"


def test_defaults(empty_env):
    cfg = load_config(env_file=empty_env, environ={})
    assert cfg == RunConfig()
    assert cfg.eps_value == 1e-13
    assert cfg.eps_jet == 1e-11


def test_precedence(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"threads": 2, "seed": 5, "eps_jet": 1e-10}), encoding="utf-8")
    env = tmp_path / ".env"
    env.write_text("THETA_BIDIFF_SEED=6\nTHETA_BIDIFF_THREADS=3\n", encoding="utf-8")

    cfg = load_config(config, env, environ={})
    assert (cfg.threads, cfg.seed, cfg.eps_jet) == (3, 6, 1e-10)

    cfg = load_config(config, env, environ={"THETA_BIDIFF_THREADS": "4"})
    assert cfg.threads == 4

    cfg = load_config(config, env, environ={"THETA_BIDIFF_THREADS": "4"}, threads=8, seed=None)
    assert (cfg.threads, cfg.seed) == (8, 6)


@pytest.mark.parametrize("payload", [{"eps_value": 1e-3}, {"threads": 0}, {"bogus": 1},
                                     {"output_format": "xml"}, {"seed": -1}])
def test_invalid_config(tmp_path, empty_env, payload):
    config = tmp_path / "run.json"
    config.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_config(config, empty_env, environ={})
    assert exc.value.exit_code == 2


def test_unreadable_config(tmp_path, empty_env):
    config = tmp_path / "run.json"
    config.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(config, empty_env, environ={})


def test_ordered_map_keeps_input_order():
    items = list(range(50))
    assert ordered_map(lambda k: k * k, items, threads=4) == [k * k for k in items]
