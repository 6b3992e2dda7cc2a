"""Run configuration: defaults, `key = value` file parsing, validation.

One flat config object covers the evolution loop plus the environment and
strategy knobs so that a single file (or CLI override set) fully determines
a run.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for invalid configuration values or unparsable config files."""


STRATEGIES = ("fitness", "novelty", "sugar", "weighted", "pixel")
INPUT_MODES = ("sensors", "no_input", "binary_counter")
COLLISION_MODES = ("block", "freeze")
SUGAR_LAYOUTS = ("per_generation", "fixed")
REPRODUCE_MODES = ("from_elite", "literal", "random")
GAMES = ("collector", "crossing")


@dataclass
class RunConfig:
    # evolution loop
    population_size: int = 250
    max_generations: int = 1200
    time_frame: int = 600
    elite_fraction: float = 0.10
    mutation_sigma: float = 0.1
    master_seed: int = 0
    hidden: int = 32
    reproduce: str = "from_elite"

    # maze environment
    map: str = "medium"
    speed: float = 1.5
    collision: str = "block"
    input_mode: str = "sensors"
    counter_bits: int = 10

    # strategy
    strategy: str = "fitness"
    alpha: float = 0.5
    density: float = 0.3
    cell_size: float = 1.0
    k: int = 15
    novelty_threshold: float = 3.0
    sugar_layout: str = "per_generation"

    # grid games
    game: str = "collector"
    respawn_interval: int = 5

    def validate(self):
        if self.population_size < 10:
            raise ConfigError(f"population_size must be >= 10, got {self.population_size}")
        if not 0.0 < self.elite_fraction < 1.0:
            raise ConfigError(f"elite_fraction must be in (0, 1), got {self.elite_fraction}")
        if int(self.elite_fraction * self.population_size) < 1:
            raise ConfigError("elite_fraction * population_size must be at least 1")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if self.time_frame < 0:
            raise ConfigError("time_frame must be >= 0")
        if self.mutation_sigma <= 0.0:
            raise ConfigError(f"mutation_sigma must be > 0, got {self.mutation_sigma}")
        if self.hidden < 1:
            raise ConfigError("hidden must be >= 1")
        if self.speed <= 0.0:
            raise ConfigError("speed must be > 0")
        if not 0.0 <= self.density <= 1.0:
            raise ConfigError(f"density must be in [0, 1], got {self.density}")
        if self.cell_size <= 0.0:
            raise ConfigError("cell_size must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.novelty_threshold < 0.0:
            raise ConfigError("novelty_threshold must be >= 0")
        if self.respawn_interval < 1:
            raise ConfigError("respawn_interval must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r} (choose from {STRATEGIES})")
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(f"unknown input_mode {self.input_mode!r}")
        if self.collision not in COLLISION_MODES:
            raise ConfigError(f"unknown collision mode {self.collision!r}")
        if self.sugar_layout not in SUGAR_LAYOUTS:
            raise ConfigError(f"unknown sugar_layout {self.sugar_layout!r}")
        if self.reproduce not in REPRODUCE_MODES:
            raise ConfigError(f"unknown reproduce mode {self.reproduce!r}")
        if self.game not in GAMES:
            raise ConfigError(f"unknown game {self.game!r} (choose from {GAMES})")
        if self.input_mode == "binary_counter" and self.time_frame > 0:
            needed = max(1, math.ceil(math.log2(max(2, self.time_frame))))
            if self.counter_bits < needed:
                raise ConfigError(
                    f"counter_bits={self.counter_bits} cannot index time_frame={self.time_frame}"
                    f" (need >= {needed})"
                )
        return self

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
# Keys consumed by the experiment harness rather than a single run.
HARNESS_KEYS = ("runs", "seed_base", "out")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse `key = value` lines with `#` comments into a raw string dict."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        raw[key] = value
    return raw


def parse_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {kind}") from exc


def apply_overrides(config: RunConfig, raw: dict, ignore=HARNESS_KEYS) -> RunConfig:
    """Apply raw string overrides to a config, coercing to field types."""
    updates = {}
    for key, value in raw.items():
        if key in ignore:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce(key, value) if isinstance(value, str) else value
    return config.replace(**updates) if updates else config


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    return apply_overrides(cfg, parse_config_file(path)).validate()
