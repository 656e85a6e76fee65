"""Flat key-value instance configuration (YAML mapping of scalars and lists).

Keys are the :class:`SystemParams` field names plus the per-device keys
``distances``, ``weights``, ``k_eff``, ``cycles_per_bit`` and
``residual_energy`` (scalar or one value per device). ``noise_n0_dbm`` may
replace ``noise_n0``. Anything else is rejected.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .model import Device, ModelError, SystemParams, build_instance, dbm_to_watts, fig3_distances

CONFIG_DIR_ENV = "WPMEC_CONFIG_DIR"

PARAM_KEYS = {f.name for f in dataclasses.fields(SystemParams)}
DEVICE_KEYS = {"distances", "weights", "k_eff", "cycles_per_bit", "residual_energy"}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class InstanceConfig:
    params: SystemParams
    distances: tuple[float, ...]
    weights: float | tuple[float, ...] = 1.0
    k_eff: float | tuple[float, ...] = 1e-26
    cycles_per_bit: float | tuple[float, ...] = 100.0
    residual_energy: float | tuple[float, ...] = 0.0

    def devices(self) -> list[Device]:
        return build_instance(self.params, self.distances, self.weights, self.k_eff,
                              self.cycles_per_bit, self.residual_energy)

    def with_params(self, params: SystemParams) -> "InstanceConfig":
        return dataclasses.replace(self, params=params)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self.params, f.name) for f in dataclasses.fields(SystemParams)}
        d["power_cap_rule"] = self.params.power_cap_rule.value
        for key in ("distances", "weights", "k_eff", "cycles_per_bit", "residual_energy"):
            value = getattr(self, key)
            d[key] = list(value) if isinstance(value, tuple) else value
        return d


def resolve_path(path: str | os.PathLike) -> Path:
    """Find a config file, falling back to ``$WPMEC_CONFIG_DIR`` for relative paths."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def _number(key, value):
    # PyYAML follows YAML 1.1, which reads 1.0e7 (no exponent sign) as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key)
    return float(value)


def parse_config(data: dict) -> InstanceConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat key-value mapping")
    unknown = sorted(set(data) - PARAM_KEYS - DEVICE_KEYS - {"noise_n0_dbm"})
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}", unknown[0])
    if "noise_n0" in data and "noise_n0_dbm" in data:
        raise ConfigError("noise_n0: give either noise_n0 or noise_n0_dbm, not both", "noise_n0")

    kwargs = {}
    for key in PARAM_KEYS & set(data):
        kwargs[key] = data[key] if key == "power_cap_rule" else _number(key, data[key])
    if "noise_n0_dbm" in data:
        kwargs["noise_n0"] = dbm_to_watts(_number("noise_n0_dbm", data["noise_n0_dbm"]))
    try:
        params = SystemParams(**kwargs)
    except (ModelError, ValueError) as exc:
        key = next((k for k in kwargs if k in str(exc)), None)
        if key is None and "power_cap_rule" in kwargs:
            key = "power_cap_rule"
        raise ConfigError(f"{key or 'params'}: {exc}", key) from exc

    per_device = {}
    for key in DEVICE_KEYS & set(data):
        value = data[key]
        if isinstance(value, list):
            per_device[key] = tuple(_number(key, v) for v in value)
        else:
            per_device[key] = _number(key, value)
    distances = per_device.pop("distances", tuple(fig3_distances()))
    if not isinstance(distances, tuple):
        distances = (distances,)
    cfg = InstanceConfig(params, distances, **per_device)
    try:
        cfg.devices()
    except ModelError as exc:
        key = next((k for k in DEVICE_KEYS if k.rstrip("s") in str(exc)), "distances")
        raise ConfigError(f"{key}: {exc}", key) from exc
    return cfg


def load_config(path: str | os.PathLike | None) -> InstanceConfig:
    """Read and validate a config file; ``None`` gives the default six-device line."""
    if path is None:
        return parse_config({})
    p = resolve_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: not valid YAML: {exc}") from exc
    return parse_config(data)
