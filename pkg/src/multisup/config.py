"""Config construction: JSON files, environment overrides, --set pairs.

Precedence, lowest to highest: dataclass defaults, config file, environment
variables, explicit --set overrides. Environment variables use the
``MULTISUP_`` prefix with ``__`` separating nesting levels, e.g.
``MULTISUP_LOSS__GAMMA_B=0.8`` sets the ``gamma_b`` field of the nested
loss config. Unknown environment keys are ignored (they may address a
different subcommand); unknown file or --set keys are errors.
"""

from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

from .loss import LossConfig
from .synth import SynthConfig
from .trainer import TrainConfig

ENV_PREFIX = "MULTISUP_"

# Environment keys that configure the harness, not a config dataclass.
_RESERVED_ENV = {"threads"}


class ConfigError(ValueError):
    pass


def load_json_config(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def env_overrides(environ=None) -> dict:
    """Nested dict built from MULTISUP_* variables; values parsed as JSON
    when possible, kept as strings otherwise."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = [p.lower() for p in key[len(ENV_PREFIX):].split("__") if p]
        if not parts or parts[0] in _RESERVED_ENV:
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                break
        else:
            node[parts[-1]] = value
    return out


def parse_set_overrides(pairs) -> dict:
    """--set key=value pairs into a nested dict; dots or double
    underscores both nest."""
    out: dict = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        parts = [p for p in key.replace("__", ".").split(".") if p]
        if not parts:
            raise ConfigError(f"--set with empty key in {pair!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _build(cls, data: dict, strict: bool, where: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            if strict:
                raise ConfigError(f"{where}: unknown config key {key!r} for {cls.__name__}")
            continue
        ftype = fields[key].type
        nested = {"LossConfig": LossConfig}.get(str(ftype).split(".")[-1])
        if nested is None and ftype is LossConfig:
            nested = LossConfig
        if isinstance(value, dict) and (nested is not None or key == "loss"):
            kwargs[key] = _build(nested or LossConfig, value, strict, f"{where}.{key}")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _layered(cls, file_data: dict | None, env: dict | None, sets: dict | None, where: str):
    data: dict = {}
    if file_data:
        # Validate file keys strictly against the dataclass.
        _build(cls, file_data, strict=True, where=where)
        data = _merge(data, file_data)
    if env:
        data = _merge(data, _prune_unknown(cls, env))
    if sets:
        _build(cls, sets, strict=True, where="--set")
        data = _merge(data, sets)
    return _build(cls, data, strict=True, where=where)


def _prune_unknown(cls, data: dict) -> dict:
    fields = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in data.items():
        if key not in fields:
            continue
        if key == "loss" and isinstance(value, dict):
            out[key] = _prune_unknown(LossConfig, value)
        else:
            out[key] = value
    return out


def build_synth_config(file_data: dict | None = None, env: dict | None = None,
                       sets: dict | None = None, where: str = "config") -> SynthConfig:
    return _layered(SynthConfig, file_data, env, sets, where)


def build_train_config(file_data: dict | None = None, env: dict | None = None,
                       sets: dict | None = None, where: str = "config") -> TrainConfig:
    return _layered(TrainConfig, file_data, env, sets, where)


def config_as_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def threads_from_env(default: int, environ=None) -> int:
    environ = os.environ if environ is None else environ
    raw = environ.get(ENV_PREFIX + "THREADS")
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{ENV_PREFIX}THREADS must be an integer, got {raw!r}") from None
