"""
Run configuration file.

INI format with sections [model], [optimizer], [simulate] and [paths]; keys
are the field names of ModelConfig, OptimizerConfig, ToyWorldConfig and
PathsConfig. Unknown sections or keys are rejected.

Example:
    [model]
    k_items = 8
    k_price = 2
    use_season = false
    think_ahead = true

    [optimizer]
    max_iterations = 5000

    [paths]
    data_dir = data/toy
"""
import configparser
import logging
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

from .exceptions import ConfigError
from .inference.config import OptimizerConfig
from .model.config import ModelConfig, load_tie_groups
from .simulation.toy_world import ToyWorldConfig

logger = logging.getLogger(__name__)

_NONE = {"", "none", "null"}


@dataclass
class PathsConfig:
    data_dir: Optional[Path] = None
    checkpoint: Optional[Path] = None
    out: Optional[Path] = None


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    simulate: ToyWorldConfig = field(default_factory=ToyWorldConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def validate(self) -> "RunConfig":
        self.model.validate()
        self.optimizer.validate()
        self.simulate.validate()
        return self


_SECTIONS = {
    "model": ModelConfig,
    "optimizer": OptimizerConfig,
    "simulate": ToyWorldConfig,
    "paths": PathsConfig,
}


def _coerce(section: str, key: str, raw: str, hint: Any, base_dir: Path) -> Any:
    value = raw.strip()
    optional = False
    if typing.get_origin(hint) is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        optional, hint = True, args[0]
    if optional and value.lower() in _NONE:
        return None

    try:
        if section == "model" and key == "tie_groups":
            return load_tie_groups(base_dir / value)
        if hint is bool:
            lowered = value.lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(f"not a boolean: {value!r}")
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]
        if hint is int:
            return int(value)
        if hint is float:
            return float(value)
        if hint is Path:
            return base_dir / value
    except ValueError as e:
        raise ConfigError(f"[{section}] {key}: {e}") from None
    raise ConfigError(f"[{section}] {key}: unsupported setting type {hint}")


def load_run_config(path: Optional[Path]) -> RunConfig:
    """
    Read a run configuration; all defaults when `path` is None.

    Relative paths (data files, tie groups) are resolved against the file's directory.
    """
    if path is None:
        return RunConfig().validate()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None

    unknown_sections = set(parser.sections()) - set(_SECTIONS)
    if unknown_sections:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown_sections)}")

    values: Dict[str, Any] = {}
    for section, cls in _SECTIONS.items():
        hints = typing.get_type_hints(cls)
        names = {f.name for f in fields(cls)}
        kwargs = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in names:
                    raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
                kwargs[key] = _coerce(section, key, raw, hints[key], path.parent)
        values[section] = cls(**kwargs)

    config = RunConfig(**values).validate()
    logger.info(f"Loaded run configuration from {path}")
    return config
