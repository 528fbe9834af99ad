"""Run configuration.

One flat dataclass covers every tunable the command-line tools accept. A
config can round-trip through an INI file ([run] section) without loss, and
values merge with a fixed precedence: explicit flags beat the file, the
file beats the built-in defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import SchemaError

_SECTION = "run"
_NONE = "none"


@dataclass(frozen=True)
class RunConfig:
    iou_threshold: float = 0.5
    trust_threshold: float | None = None
    conf_threshold: float | None = None
    top_k: int = 10
    normalize_weights: bool = True
    bleu_threshold: float = 0.5
    bleu_order: int = 4
    data_rule_mode: str = "direct"
    seed: int = 0
    neg_ratio: float = 1.0
    workers: int | None = None
    calibration_fraction: float = 0.2
    adapter_endpoint: str | None = None

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        return os.cpu_count() or 1


_FIELD_TYPES: dict[str, type] = {
    f.name: t
    for f, t in zip(
        dataclasses.fields(RunConfig),
        (float, float, float, int, bool, float, int, str, int, float, int, float, str),
    )
}
_OPTIONAL = {"trust_threshold", "conf_threshold", "workers", "adapter_endpoint"}


def _parse_value(name: str, raw: str) -> Any:
    raw = raw.strip()
    if name in _OPTIONAL and raw.lower() == _NONE:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise SchemaError(f"config field {name!r}: cannot parse {raw!r}") from exc


def _format_value(value: Any) -> str:
    if value is None:
        return _NONE
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def config_from_file(path: str | Path) -> RunConfig:
    """Load a RunConfig from an INI file's [run] section."""
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise SchemaError(f"config file not found: {path}")
    if not parser.has_section(_SECTION):
        raise SchemaError(f"config file {path} has no [{_SECTION}] section")
    values: dict[str, Any] = {}
    for name, raw in parser.items(_SECTION):
        if name not in _FIELD_TYPES:
            raise SchemaError(f"config file {path}: unknown field {name!r}")
        values[name] = _parse_value(name, raw)
    return RunConfig(**values)


def config_to_file(config: RunConfig, path: str | Path) -> None:
    """Write every field, None included, so the file round-trips exactly."""
    parser = configparser.ConfigParser()
    parser.add_section(_SECTION)
    for f in dataclasses.fields(RunConfig):
        parser.set(_SECTION, f.name, _format_value(getattr(config, f.name)))
    with open(path, "w", encoding="utf-8") as handle:
        parser.write(handle)


def merge_config(
    file_config: RunConfig | None, overrides: Mapping[str, Any]
) -> RunConfig:
    """Apply explicit overrides (flag values) on top of a file or defaults.

    Overrides whose value is None are treated as not given, so an unset
    command-line flag never masks a file setting.
    """
    base = file_config if file_config is not None else RunConfig()
    updates = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(updates) - set(_FIELD_TYPES)
    if unknown:
        raise SchemaError(f"unknown config overrides: {sorted(unknown)}")
    return dataclasses.replace(base, **updates)
