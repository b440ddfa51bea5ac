"""Experiment configuration: dataclass defaults, INI-style file loading,
and validation. Every ledgered default is overridable from the file."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .rl import DqnConfig

AGENT_KINDS = ("hdqn", "dqn", "heuristic")


@dataclass
class ExperimentConfig:
    # [experiment]
    master_seed: int = 7
    episode_ttis: int = 10_000
    n_train_episodes: int = 20
    n_eval_episodes: int = 5
    agent: str = "hdqn"
    output_dir: str = "out"
    scenario_path: str = ""
    tti_ms: float = 1.0
    # [topology]
    n_small_cells: int = 4
    n_ues: int = 60
    macro_radius_m: float = 600.0
    min_site_distance_m: float = 50.0
    # [traffic]
    voice_fraction: float = 0.25
    video_fraction: float = 0.5
    gaming_fraction: float = 0.25
    # [queues]
    queue_capacity_bytes: int = 2_000_000
    # [control]
    decision_interval_ttis: int = 50
    max_epoch_steps: int = 20
    goal_miss_penalty: float = 0.5
    # [heuristic]
    heuristic_w_load: float = 1 / 3
    heuristic_w_channel: float = 1 / 3
    heuristic_w_service: float = 1 / 3
    # [rl]
    rl: DqnConfig = field(default_factory=DqnConfig)

    @property
    def traffic_mix(self) -> tuple[float, float, float]:
        return (self.voice_fraction, self.video_fraction, self.gaming_fraction)

    @property
    def heuristic_weights(self) -> tuple[float, float, float]:
        return (self.heuristic_w_load, self.heuristic_w_channel, self.heuristic_w_service)

    def validate(self) -> "ExperimentConfig":
        if abs(sum(self.traffic_mix) - 1.0) > 1e-9 or min(self.traffic_mix) < 0:
            raise ConfigError(f"traffic fractions must be >= 0 and sum to 1, got {self.traffic_mix}")
        for name in ("episode_ttis", "n_train_episodes", "n_eval_episodes", "n_small_cells",
                     "n_ues", "decision_interval_ttis", "max_epoch_steps", "queue_capacity_bytes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.agent not in AGENT_KINDS:
            raise ConfigError(f"agent must be one of {AGENT_KINDS}, got {self.agent!r}")
        if self.tti_ms != 1.0:
            raise ConfigError("the simulator is fixed at tti_ms = 1.0")
        if self.macro_radius_m <= 0:
            raise ConfigError("macro_radius_m must be > 0")
        return self


_SECTION_FIELDS = {
    "experiment": ("master_seed", "episode_ttis", "n_train_episodes", "n_eval_episodes",
                   "agent", "output_dir", "scenario_path", "tti_ms"),
    "topology": ("n_small_cells", "n_ues", "macro_radius_m", "min_site_distance_m"),
    "traffic": ("voice_fraction", "video_fraction", "gaming_fraction"),
    "queues": ("queue_capacity_bytes",),
    "control": ("decision_interval_ttis", "max_epoch_steps", "goal_miss_penalty"),
    "heuristic": ("heuristic_w_load", "heuristic_w_channel", "heuristic_w_service"),
}

_RL_FIELDS = {f.name: f.type for f in fields(DqnConfig)}


def _convert(raw: str, current):
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        return tuple(int(v) for v in raw.replace(",", " ").split())
    return raw


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Defaults, overlaid with the INI file when one is given."""
    cfg = ExperimentConfig()
    if path is None:
        return cfg.validate()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    for section in parser.sections():
        if section == "rl":
            for key, raw in parser.items(section):
                if key not in _RL_FIELDS:
                    raise ConfigError(f"unknown rl option {key!r}")
                try:
                    setattr(cfg.rl, key, _convert(raw, getattr(cfg.rl, key)))
                except ValueError as exc:
                    raise ConfigError(f"bad value for rl.{key}: {raw!r}") from exc
            continue
        if section not in _SECTION_FIELDS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTION_FIELDS[section]:
                raise ConfigError(f"unknown option {key!r} in section [{section}]")
            try:
                setattr(cfg, key, _convert(raw, getattr(cfg, key)))
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    return cfg.validate()
