"""
AI-driven development file
Purpose: YAML experiment configuration with strict keys, environment overrides and a stable hash
Module: UAV_LoRa_SAR_Lab/config.py
Dependencies: pyyaml, python-dotenv (via main), world, radio, policy, train_rl, train_meta
"""

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from policy import PolicyArch
from radio import Corridor, RadioGeometry
from train_meta import MetaConfig
from train_rl import TrainerConfig
from world import ScenarioConfig

logger = logging.getLogger(__name__)

POLICY_KINDS = ("optimal", "greedy", "rl", "meta")
DEFAULT_OUT_DIR = "runs"
OUT_DIR_ENV = "SARLAB_OUT_DIR"
LOG_LEVEL_ENV = "SARLAB_LOG_LEVEL"

_TOP_LEVEL_KEYS = {
    "scenario", "trainer", "meta", "network", "policy_kind", "episodes", "seeds",
    "out_dir", "checkpoint", "prior_memories", "memory_out",
}


class ConfigError(ValueError):
    """Raised for malformed configuration files or values."""


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully parsed experiment: scenario, learner settings, runs and outputs."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    meta: MetaConfig = field(default_factory=MetaConfig)
    network: PolicyArch = field(default_factory=PolicyArch)
    policy_kind: str = "optimal"
    episodes: int = 1
    seeds: Tuple[int, ...] = (0,)
    out_dir: str = DEFAULT_OUT_DIR
    checkpoint: Optional[str] = None
    prior_memories: Tuple[str, ...] = ()
    memory_out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.policy_kind not in POLICY_KINDS:
            raise ConfigError(f"policy_kind must be one of {POLICY_KINDS}, got '{self.policy_kind}'")
        if self.episodes < 0:
            raise ConfigError(f"episodes must be >= 0, got {self.episodes}")

    def referenced_files(self) -> List[str]:
        files = list(self.prior_memories)
        if self.checkpoint:
            files.insert(0, self.checkpoint)
        return files

    def file_digests(self, require_checkpoint: bool = True) -> Dict[str, str]:
        """
        SHA-256 of every referenced input file.

        Raises:
            ConfigError: If a referenced file does not exist
        """
        digests = {}
        for name in self.referenced_files():
            path = Path(name)
            if not path.is_file():
                if name == self.checkpoint and not require_checkpoint:
                    continue
                raise ConfigError(f"Referenced file does not exist: {name}")
            digests[name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    def config_hash(self) -> str:
        """First 16 hex digits of SHA-256 over the canonical JSON of everything but out_dir."""
        payload = dataclasses.asdict(self)
        payload.pop("out_dir")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def parse_seeds(value: Union[str, int, List[int], None]) -> Tuple[int, ...]:
    """
    Accept an int, a list of ints, or an inclusive range string "a..b".

    Raises:
        ConfigError: On any other form or a descending range
    """
    if value is None:
        return ()
    if isinstance(value, bool):
        raise ConfigError(f"Invalid seeds value: {value!r}")
    if isinstance(value, int):
        return (value,)
    if isinstance(value, (list, tuple)):
        if not all(isinstance(s, int) and not isinstance(s, bool) for s in value):
            raise ConfigError(f"seeds list must contain integers, got {value!r}")
        return tuple(value)
    text = str(value).strip()
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"seeds must look like 'a..b', got '{text}'") from None
    if hi < lo:
        raise ConfigError(f"seeds range '{text}' is descending")
    return tuple(range(lo, hi + 1))


def _check_keys(data: Mapping[str, Any], allowed, where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key '{where}{unknown[0]}'")


def _build(cls, data: Optional[Mapping[str, Any]], where: str, exclude=()):
    data = {} if data is None else data
    if not isinstance(data, Mapping):
        raise ConfigError(f"Section '{where.rstrip('.')}' must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)} - set(exclude)
    _check_keys(data, names, where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid section '{where.rstrip('.')}': {e}") from e


def _point(value: Any, where: str) -> Optional[Tuple[float, float]]:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{where}' must be a two-element [x, y] list")
    return (float(value[0]), float(value[1]))


def _scenario(data: Optional[Mapping[str, Any]]) -> ScenarioConfig:
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(ScenarioConfig)}
    _check_keys(data, names, "scenario.")
    terrain = data.get("terrain", "plain")
    radio_overrides = data.pop("radio", None) or {}
    if not isinstance(radio_overrides, Mapping):
        raise ConfigError("Section 'scenario.radio' must be a mapping")
    _check_keys(radio_overrides, {f.name for f in dataclasses.fields(RadioGeometry)}, "scenario.radio.")
    try:
        data["radio"] = RadioGeometry.for_terrain(terrain, **radio_overrides)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid section 'scenario.radio': {e}") from e
    if data.get("corridor") is not None:
        data["corridor"] = _build(Corridor, data["corridor"], "scenario.corridor.")
    for key in ("poi", "uav_start"):
        if key in data:
            data[key] = _point(data[key], f"scenario.{key}")
    if data.get("uav_start") is None:
        data.pop("uav_start", None)
    return _build(ScenarioConfig, data, "scenario.")


def from_mapping(raw: Optional[Mapping[str, Any]], base_dir: Optional[Path] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a parsed YAML document.

    Relative file references resolve against `base_dir`.

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    raw = {} if raw is None else raw
    if not isinstance(raw, Mapping):
        raise ConfigError("Config root must be a mapping")
    _check_keys(raw, _TOP_LEVEL_KEYS, "")

    def resolve(name: Optional[str]) -> Optional[str]:
        if name is None or base_dir is None or Path(name).is_absolute():
            return name
        return str(base_dir / name)

    memories = raw.get("prior_memories") or []
    if isinstance(memories, str):
        memories = [memories]
    return ExperimentConfig(
        scenario=_scenario(raw.get("scenario")),
        trainer=_build(TrainerConfig, raw.get("trainer"), "trainer."),
        meta=_build(MetaConfig, raw.get("meta"), "meta."),
        network=_build(PolicyArch, raw.get("network"), "network."),
        policy_kind=str(raw.get("policy_kind", "optimal")),
        episodes=int(raw.get("episodes", 1)),
        seeds=parse_seeds(raw.get("seeds", [0])),
        out_dir=str(raw.get("out_dir") or os.getenv(OUT_DIR_ENV, DEFAULT_OUT_DIR)),
        checkpoint=resolve(raw.get("checkpoint")),
        prior_memories=tuple(resolve(str(m)) for m in memories),
        memory_out=resolve(raw.get("memory_out")),
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load and validate a YAML experiment file.

    Raises:
        ConfigError: If the file is missing, not valid YAML, or has invalid content
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Config {path} is not valid YAML: {e}") from e
    config = from_mapping(raw, base_dir=path.parent)
    logger.info(f"Loaded config {path} (hash {config.config_hash()})")
    return config
