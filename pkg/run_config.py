"""
Run configuration for every subcommand.

Sources, lowest to highest precedence:
  1. RunConfig defaults
  2. JSON file passed with --config
  3. .env in the working directory (python-dotenv), THETA_BIDIFF_* keys
  4. THETA_BIDIFF_THREADS in the process environment
  5. explicit CLI flags (--threads, --seed, --eps)
"""
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from errors import ConfigError

try:
    from dotenv import dotenv_values
except ImportError:
    dotenv_values = None

log = logging.getLogger("thetabidiff.config")

ENV_PREFIX = "THETA_BIDIFF_"
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class RunConfig:
    eps_value: float = 1e-13
    eps_jet: float = 1e-11
    lattice_cap: int = 200
    threads: int = 1
    seed: int = 20240607
    output_format: str = "json"
    rank_tol: float = 1e-8
    fd_step: float = 1e-4
    cluster_radius: float = 1e-6

    def validate(self) -> "RunConfig":
        if not 0.0 < self.eps_value <= 1e-4:
            raise ConfigError(f"eps_value must lie in (0, 1e-4], got {self.eps_value!r}")
        if not 0.0 < self.eps_jet <= 1e-4:
            raise ConfigError(f"eps_jet must lie in (0, 1e-4], got {self.eps_jet!r}")
        if self.lattice_cap < 8:
            raise ConfigError(f"lattice_cap must be at least 8, got {self.lattice_cap!r}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"output_format must be 'csv' or 'json', got {self.output_format!r}")
        if not 0.0 < self.rank_tol < 1.0:
            raise ConfigError(f"rank_tol must lie in (0, 1), got {self.rank_tol!r}")
        if not 0.0 < self.fd_step < 1.0:
            raise ConfigError(f"fd_step must lie in (0, 1), got {self.fd_step!r}")
        if not self.cluster_radius > 0.0:
            raise ConfigError(f"cluster_radius must be positive, got {self.cluster_radius!r}")
        return self

    def to_json(self) -> dict:
        return asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value):
    kind = _FIELD_TYPES[name]
    try:
        if kind in ("int", int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if kind in ("float", float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config field {name!r}: cannot use {value!r} ({e})")


def _overrides_from_mapping(mapping: dict, source: str) -> dict:
    out = {}
    for key, value in mapping.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config field {key!r} in {source}")
        out[key] = _coerce(key, value)
    return out


def _env_overrides(mapping: dict) -> dict:
    out = {}
    for key, value in mapping.items():
        if not key.startswith(ENV_PREFIX) or value is None:
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in _FIELD_TYPES:
            out[name] = _coerce(name, value)
    return out


def load_config(config_path: Path | None = None, env_file: Path | None = None,
                environ: dict | None = None, **cli) -> RunConfig:
    cfg = RunConfig()

    if config_path is not None:
        try:
            payload = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {config_path}: {e}")
        if not isinstance(payload, dict):
            raise ConfigError(f"config {config_path} must hold a JSON object")
        cfg = replace(cfg, **_overrides_from_mapping(payload, str(config_path)))

    env_file = Path(".env") if env_file is None else Path(env_file)
    if dotenv_values is not None and env_file.is_file():
        cfg = replace(cfg, **_env_overrides(dotenv_values(env_file)))

    environ = os.environ if environ is None else environ
    threads_env = environ.get(ENV_PREFIX + "THREADS")
    if threads_env:
        cfg = replace(cfg, threads=_coerce("threads", threads_env))

    flags = {k: v for k, v in cli.items() if v is not None}
    if flags:
        cfg = replace(cfg, **_overrides_from_mapping(flags, "command line"))

    cfg.validate()
    log.debug(f"[config] {cfg}")
    return cfg


def ordered_map(fn, items, threads: int = 1) -> list:
    """map() over a thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
