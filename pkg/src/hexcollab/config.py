"""Configuration files shared by the CLI and the server.

A config file is a JSON object with optional sections::

    {
      "turn":   {"leader_steps": 5, "follower_steps": 10, "initial_turns": 12, ...},
      "map":    {"width": 25, "height": 25, "obstacle_density": 0.12, "initial_cards": 21, "seed": 0},
      "vocab":  {"colors": [...], "shapes": [...], "counts": [1, 2, 3]},
      "server": {"host": "127.0.0.1", "port": 8765, "follower_policy": "template", ...}
    }

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

from hexcollab.cards import CardVocab
from hexcollab.engine import ConfigError, GameConfig, TurnConfig
from hexcollab.mapgen import MapConfig

SECTIONS = ("turn", "map", "vocab", "server")


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    # Follower seat: a registered policy name, or None to wait for a human.
    follower_policy: str | None = "template"
    # Leader seat: "scripted" runs the built-in scripted leader, None waits for a human.
    leader_bot: str | None = None
    view_radius: int = 7
    view_half_angle: float = 60.0
    data_dir: str = "games"
    seed: int = 0
    # Timers follow the turn section; these override when set.
    leader_time_s: float | None = None
    follower_time_s: float | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.port < 65536:
            raise ConfigError(f"port out of range: {self.port}")
        if self.view_radius < 0:
            raise ConfigError("view_radius must be non-negative")


@dataclass(frozen=True)
class AppConfig:
    game: GameConfig = field(default_factory=GameConfig)
    map: MapConfig = field(default_factory=MapConfig)
    server: ServerConfig = field(default_factory=ServerConfig)

    def timers(self) -> tuple[float | None, float | None]:
        s, t = self.server, self.game.turn
        return (
            s.leader_time_s if s.leader_time_s is not None else t.leader_time_s,
            s.follower_time_s if s.follower_time_s is not None else t.follower_time_s,
        )

    def to_dict(self) -> dict:
        return {
            "turn": self.game.turn.to_dict(),
            "map": self.map.to_dict(),
            "vocab": self.game.vocab.to_dict(),
            "server": asdict(self.server),
        }


def _check_keys(section: str, data: Mapping, allowed: set[str]) -> None:
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(extra)}")


def config_from_dict(d: Mapping) -> AppConfig:
    _check_keys("config", d, set(SECTIONS))
    turn = d.get("turn", {})
    _check_keys("turn", turn, {f.name for f in fields(TurnConfig)})
    map_ = d.get("map", {})
    _check_keys("map", map_, {f.name for f in fields(MapConfig)})
    server = d.get("server", {})
    _check_keys("server", server, {f.name for f in fields(ServerConfig)})
    try:
        vocab = CardVocab.from_dict(d["vocab"]) if "vocab" in d else GameConfig().vocab
        return AppConfig(
            GameConfig(TurnConfig.from_dict(turn), vocab),
            MapConfig.from_dict(map_) if map_ else MapConfig(),
            ServerConfig(**server),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> AppConfig:
    """Read a config file (if any), then apply environment overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = config_from_dict(data)
    return apply_env(cfg, os.environ if env is None else env)


# Environment variable -> (section, key, parser)
ENV_OVERRIDES = {
    "HEXCOLLAB_HOST": ("server", "host", str),
    "HEXCOLLAB_PORT": ("server", "port", int),
    "HEXCOLLAB_POLICY": ("server", "follower_policy", lambda v: None if v in ("", "human", "none") else v),
    "HEXCOLLAB_LEADER_TIME": ("server", "leader_time_s", float),
    "HEXCOLLAB_FOLLOWER_TIME": ("server", "follower_time_s", float),
    "HEXCOLLAB_DATA_DIR": ("server", "data_dir", str),
    "HEXCOLLAB_MAP_SEED": ("map", "seed", int),
    "HEXCOLLAB_MAP_SIZE": ("map", "size", int),
}


def apply_env(cfg: AppConfig, env: Mapping[str, str]) -> AppConfig:
    server, map_ = cfg.server, cfg.map
    for var, (section, key, parse) in ENV_OVERRIDES.items():
        if var not in env:
            continue
        try:
            value = parse(env[var])
        except ValueError as exc:
            raise ConfigError(f"{var}={env[var]!r}: {exc}") from exc
        if section == "server":
            server = replace(server, **{key: value})
        elif key == "size":
            map_ = replace(map_, width=value, height=value)
        else:
            map_ = replace(map_, **{key: value})
    return replace(cfg, server=server, map=map_)
