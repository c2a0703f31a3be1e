"""Typed configuration mirroring the INI training file.

Section headers are decorative: keys are globally unique and looked up
across all sections. Unknown keys warn instead of failing so configs can
carry site-local extras.
"""
from __future__ import annotations

import configparser
import dataclasses
import logging
from dataclasses import dataclass

from .errors import ConfigError, ConfigRangeError, ConfigTypeError, MissingRequiredKey

logger = logging.getLogger(__name__)

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(value)


@dataclass
class Config:
    """All training and architecture knobs, with their defaults."""

    dataset_folder: str
    using_character_lstm: bool = True
    char_embedding_dimension: int = 25
    char_lstm_dimension: int = 50
    token_emb_pretrained_file: str = ""
    token_embedding_dimension: int = 200
    token_lstm_dimension: int = 300
    using_crf: bool = True
    random_initial_transitions: bool = True
    dropout: float = 0.5
    patience: int = 10
    maximum_number_of_epochs: int = 100
    maximum_training_time: float = 10.0  # hours
    number_of_cpu_threads: int = 8
    learning_rate: float = 0.005
    gradient_clip: float = 5.0
    tagging_format: str = "bio"
    seed: int = 42
    vocab_only_embedded: bool = False

    def replace(self, **kwargs) -> "Config":
        return dataclasses.replace(self, **kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "Config":
        known = {f.name for f in dataclasses.fields(Config)}
        return Config(**{k: v for k, v in d.items() if k in known})


_PARSERS = {
    "dataset_folder": str,
    "using_character_lstm": _parse_bool,
    "char_embedding_dimension": int,
    "char_lstm_dimension": int,
    "token_emb_pretrained_file": str,
    "token_embedding_dimension": int,
    "token_lstm_dimension": int,
    "using_crf": _parse_bool,
    "random_initial_transitions": _parse_bool,
    "dropout": float,
    "patience": int,
    "maximum_number_of_epochs": int,
    "maximum_training_time": float,
    "number_of_cpu_threads": int,
    "learning_rate": float,
    "gradient_clip": float,
    "tagging_format": str,
    "seed": int,
    "vocab_only_embedded": _parse_bool,
}


def _check_ranges(cfg: Config):
    for key in ("char_embedding_dimension", "char_lstm_dimension",
                "token_embedding_dimension", "token_lstm_dimension"):
        if getattr(cfg, key) <= 0:
            raise ConfigRangeError(f"{key} must be positive")
    if not 0.0 <= cfg.dropout < 1.0:
        raise ConfigRangeError(f"dropout must be in [0, 1), got {cfg.dropout}")
    if cfg.patience < 0:
        raise ConfigRangeError("patience must be >= 0")
    if cfg.maximum_number_of_epochs < 1:
        raise ConfigRangeError("maximum_number_of_epochs must be >= 1")
    if cfg.maximum_training_time <= 0:
        raise ConfigRangeError("maximum_training_time must be positive")
    if cfg.number_of_cpu_threads < 1:
        raise ConfigRangeError("number_of_cpu_threads must be >= 1")
    if cfg.learning_rate <= 0:
        raise ConfigRangeError("learning_rate must be positive")
    if cfg.gradient_clip < 0:
        raise ConfigRangeError("gradient_clip must be >= 0")
    if cfg.tagging_format not in ("bio", "bioes"):
        raise ConfigRangeError(
            f"tagging_format must be 'bio' or 'bioes', got {cfg.tagging_format!r}")


def parse_config(text: str) -> Config:
    """Parse INI text into a typed Config, applying defaults for absent
    keys. Unknown keys warn; a missing dataset_folder is an error."""
    parser = configparser.ConfigParser(
        comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";"),
        interpolation=None, strict=False)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}")

    values: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _PARSERS:
                logger.warning("unknown configuration key %r ignored", key)
                continue
            try:
                values[key] = _PARSERS[key](raw.strip())
            except ValueError:
                raise ConfigTypeError(f"{key}: cannot parse value {raw.strip()!r}")
    if "dataset_folder" not in values:
        raise MissingRequiredKey("dataset_folder is required")
    if "tagging_format" in values:
        values["tagging_format"] = values["tagging_format"].lower()
    cfg = Config(**values)
    _check_ranges(cfg)
    return cfg


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
