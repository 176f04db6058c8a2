"""Engine configuration with precedence: CLI flag > environment > config file > default.

The config file is one flat JSON object whose keys are the EngineConfig field
names. Every field can also be set through ``RMD_<FIELD>`` (upper case), e.g.
``RMD_SEED`` or ``RMD_T0``. API keys are read only from the environment.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from .agents.decompose import AgentConfig
from .diffusion.sde import NoiseSchedule, SdeditConfig
from .errors import InvalidArgumentError
from .retrieval.scoring import RetrievalConfig

ENV_PREFIX = "RMD_"


@dataclass(frozen=True)
class EngineConfig:
    # paths
    index: str | None = None
    skeleton: str | None = None
    masks: str | None = None
    prompts: str | None = None
    score_model: str | None = None
    llm_fixture: str | None = None
    embed_table: str | None = None
    # providers
    llm: str = "fixture"
    llm_base_url: str | None = None
    llm_model: str | None = None
    embedder: str = "stub"
    embed_dim: int = 512
    embed_base_url: str | None = None
    embed_model: str | None = None
    # retrieval
    lam: float = 0.05
    tau_full: float = 0.96
    tau_half: float = 0.96
    k: int = 5
    score_rule: str = "max"
    # agents
    temperature: float = 0.7
    max_retries: int = 2
    max_in_flight: int = 4
    # composition
    fine_root_rotation: str = "trajectory"
    # refinement
    t0: float = 0.96
    steps: int = 50
    mode: str = "deterministic"
    sigma_min: float = 0.01
    sigma_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.llm not in ("fixture", "remote"):
            raise InvalidArgumentError("llm must be 'fixture' or 'remote'")
        if self.embedder not in ("stub", "table", "remote"):
            raise InvalidArgumentError("embedder must be 'stub', 'table' or 'remote'")
        if self.fine_root_rotation not in ("trajectory", "lower_body"):
            raise InvalidArgumentError("fine_root_rotation must be 'trajectory' or 'lower_body'")
        # constructing the sub-configs validates their ranges
        self.retrieval, self.agent, self.sdedit, self.schedule  # noqa: B018

    @property
    def retrieval(self) -> RetrievalConfig:
        return RetrievalConfig(self.lam, self.tau_full, self.tau_half, self.k, self.score_rule)

    @property
    def agent(self) -> AgentConfig:
        return AgentConfig(self.k, self.temperature, self.max_retries, self.max_in_flight)

    @property
    def sdedit(self) -> SdeditConfig:
        return SdeditConfig(self.t0, self.steps, self.mode, self.seed)

    @property
    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule(self.sigma_min, self.sigma_max)

    def require_path(self, name: str) -> Path:
        value = getattr(self, name)
        if value is None:
            raise InvalidArgumentError(f"no {name.replace('_', ' ')} configured (--{name.replace('_', '-')})")
        p = Path(value)
        if not p.exists():
            raise InvalidArgumentError(f"{name.replace('_', ' ')} not found: {p}")
        return p


_FIELDS = {f.name: f for f in fields(EngineConfig)}


def _coerce(name: str, value, source: str):
    if value is None:
        return None
    kind = _FIELDS[name].type
    try:
        if kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"{source}: invalid value {value!r} for {name}") from None


def read_config_file(path) -> dict:
    try:
        d = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise InvalidArgumentError(f"{path}: config must be a JSON object")
    unknown = sorted(set(d) - set(_FIELDS))
    if unknown:
        raise InvalidArgumentError(f"{path}: unknown config keys {unknown}")
    base = Path(path).resolve().parent
    out = {}
    for k, v in d.items():
        v = _coerce(k, v, str(path))
        # relative paths in a config file are relative to that file
        if isinstance(v, str) and k in ("index", "skeleton", "masks", "prompts", "score_model", "llm_fixture",
                                        "embed_table") and not Path(v).is_absolute():
            v = str(base / v)
        out[k] = v
    return out


def read_env(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    return {name: _coerce(name, environ[ENV_PREFIX + name.upper()], ENV_PREFIX + name.upper())
            for name in _FIELDS if ENV_PREFIX + name.upper() in environ}


def resolve_config(config_path=None, cli: Mapping | None = None,
                   environ: Mapping[str, str] | None = None) -> EngineConfig:
    """Merge the layers; ``cli`` entries that are None count as unset."""
    merged: dict = {}
    if config_path is not None:
        merged.update(read_config_file(config_path))
    merged.update(read_env(environ))
    for k, v in (cli or {}).items():
        if v is not None:
            if k not in _FIELDS:
                raise InvalidArgumentError(f"unknown setting {k!r}")
            merged[k] = _coerce(k, v, f"--{k.replace('_', '-')}")
    return EngineConfig(**merged)


def with_overrides(config: EngineConfig, **changes) -> EngineConfig:
    return dataclasses.replace(config, **{k: v for k, v in changes.items() if v is not None})
