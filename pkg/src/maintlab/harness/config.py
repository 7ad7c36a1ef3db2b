"""Run configuration: every knob in one place, loadable from key = value text.

Keys are ``section.field`` where the section is a module config (fleet,
dae, spectral, fno, gcn, ppo, qlearn) and the field is that dataclass's
attribute, plus a ``run`` section for orchestration (seed, output
directory, evaluation protocol, state mode, plotting). Every key has a
default; unknown keys are rejected before anything runs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, replace
from pathlib import Path

from ..baseline import QLearningConfig
from ..dae import DaeConfig
from ..features import FnoConfig, SpectralConfig
from ..graph import GcnConfig
from ..plantsim import FleetConfig
from ..policy import PpoConfig

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_overrides", "default_config",
           "config_documentation"]


class ConfigError(ValueError):
    """Bad key, malformed value, or unreadable config file."""


@dataclass(frozen=True)
class RunConfig:
    fleet: FleetConfig = FleetConfig()
    dae: DaeConfig = DaeConfig()
    spectral: SpectralConfig = SpectralConfig()
    fno: FnoConfig = FnoConfig()
    gcn: GcnConfig = GcnConfig()
    ppo: PpoConfig = PpoConfig()
    qlearn: QLearningConfig = QLearningConfig()
    seed: int = 0
    out_dir: str = "runs/default"
    data_csv: str = ""  # optional: ingest an external fleet CSV instead of generating
    state_mode: str = "hybrid+gnn"
    eval_horizon: int = 2000
    eval_seeds: tuple = (0, 1, 2, 3, 4)
    policy_samples_per_level: int = 24
    train_restarts: int = 4  # policy-training restarts, selected on validation rollouts
    validation_horizon: int = 800
    validation_rollouts: int = 3
    plots: bool = True

    _SECTIONS = ("fleet", "dae", "spectral", "fno", "gcn", "ppo", "qlearn")
    _RUN_FIELDS = ("seed", "out_dir", "data_csv", "state_mode", "eval_horizon",
                   "eval_seeds", "policy_samples_per_level", "train_restarts",
                   "validation_horizon", "validation_rollouts", "plots")

    def with_seed(self, seed: int) -> "RunConfig":
        """Propagate one master seed into every module config."""
        return replace(
            self,
            seed=seed,
            fleet=replace(self.fleet, seed=seed),
            dae=replace(self.dae, seed=seed),
            fno=replace(self.fno, seed=seed),
            ppo=replace(self.ppo, seed=seed),
            qlearn=replace(self.qlearn, seed=seed),
        )

    def flat(self) -> dict:
        out = {}
        for section in self._SECTIONS:
            cfg = getattr(self, section)
            for f in dataclasses.fields(cfg):
                out[f"{section}.{f.name}"] = getattr(cfg, f.name)
        for name in self._RUN_FIELDS:
            out[f"run.{name}"] = getattr(self, name)
        return out


def default_config() -> RunConfig:
    return RunConfig()


def _parse_like(raw: str, default, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "on", "yes"):
                return True
            if low in ("0", "false", "off", "no"):
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            if not raw:
                return ()
            parts = [p.strip() for p in raw.split(",")]
            use_int = bool(default) and isinstance(default[0], int) and not isinstance(default[0], bool)
            cast = int if use_int else float
            return tuple(cast(p) for p in parts)
        if default is None:  # optional ints (e.g. fno.fused_dim)
            if raw.lower() in ("off", "none", ""):
                return None
            return int(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _apply_one(rc: RunConfig, key: str, raw_value: str) -> RunConfig:
    if "." not in key:
        raise ConfigError(f"unknown key {key!r} (expected section.field)")
    section, _, field_name = key.partition(".")
    if section == "run":
        if field_name not in RunConfig._RUN_FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        default = getattr(RunConfig(), field_name)
        return replace(rc, **{field_name: _parse_like(raw_value, default, key)})
    if section not in RunConfig._SECTIONS:
        raise ConfigError(f"unknown section {section!r} in key {key!r}")
    cfg = getattr(rc, section)
    names = {f.name for f in dataclasses.fields(cfg)}
    if field_name not in names:
        raise ConfigError(f"unknown key {key!r}")
    default = getattr(type(cfg)(), field_name)
    try:
        new_cfg = replace(cfg, **{field_name: _parse_like(raw_value, default, key)})
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return replace(rc, **{section: new_cfg})


def parse_overrides(rc: RunConfig, pairs: dict) -> RunConfig:
    """Apply ``{key: raw string}`` overrides; unknown keys raise ConfigError."""
    for key, raw in pairs.items():
        rc = _apply_one(rc, key, str(raw))
    return rc


def load_config(path) -> RunConfig:
    """Read a flat ``key = value`` file on top of the defaults."""
    rc = RunConfig()
    if path is None:
        return rc
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    pairs = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return parse_overrides(rc, pairs)


def config_documentation() -> str:
    """Render every key with its default, for the README and --help-config."""
    lines = ["# All keys with their defaults; values shown are the defaults.\n"]
    for key, value in default_config().flat().items():
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = "off"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
