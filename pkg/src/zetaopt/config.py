"""Flat key-value experiment configuration.

Config files are UTF-8 text with one `section.key = value` per line and
`#` comments; the full key schema is documented in the README.  Parsing
and validation errors raise ConfigError with the offending key or line.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .data import BatchPlan
from .nn_core import LossConfig
from .optim import AdamHyperParams, ZetaHyperParams

__all__ = [
    "ConfigError",
    "DataSpec",
    "ExperimentConfig",
    "parse_kv_text",
    "load_config_file",
    "build_experiment_config",
    "default_compare_config",
    "SEED_ENV_VAR",
]

SEED_ENV_VAR = "ZETA_OPT_SEED"


class ConfigError(ValueError):
    """Malformed config text or an invalid key/value."""


@dataclass(frozen=True)
class DataSpec:
    """Dataset selection: a generator plus sizes, or a CSV path."""

    kind: str = "blobs"  # blobs | spirals | csv
    n: int = 4000
    dim: int = 32
    classes: int = 10
    spread: float = 1.5
    spiral_noise: float = 0.15
    noise_rate: float = 0.0
    test_fraction: float = 0.25
    seed: int = 7
    noise_seed: int | None = None  # defaults to seed + 2
    csv_path: str | None = None
    csv_header: bool = False
    csv_scale: bool = True

    @property
    def effective_noise_seed(self) -> int:
        return self.seed + 2 if self.noise_seed is None else self.noise_seed


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one training run needs; `optimizer` picks which
    hyperparameter block applies."""

    data: DataSpec = field(default_factory=DataSpec)
    hidden_dim: int = 64
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: str = "zeta"  # zeta | adam
    zeta: ZetaHyperParams = field(default_factory=ZetaHyperParams)
    adam: AdamHyperParams = field(default_factory=AdamHyperParams)
    epochs: int = 5
    batch_size: int = 64
    drop_last: bool = False
    seed: int = 42
    out_dir: str | None = None
    run_id: str | None = None
    noise_rates: tuple[float, ...] = (0.0, 0.1)  # compare conditions

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError("train.epochs must be >= 1")
        if self.optimizer not in ("zeta", "adam"):
            raise ConfigError(f"optimizer must be 'zeta' or 'adam', got {self.optimizer!r}")

    def batch_plan(self) -> BatchPlan:
        return BatchPlan(
            batch_size=self.batch_size,
            shuffle_seed=self.seed + 1,
            drop_last=self.drop_last,
        )


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines into a dict, tracking duplicate keys."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if " #" in line:
            line = line.split(" #", 1)[0].rstrip()
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config_file(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}") from e
    return parse_kv_text(text)


def _convert(key: str, value: str, target: type):
    try:
        if target is bool:
            low = value.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if target is int:
            return int(value)
        if target is float:
            return float(value)
        return value
    except ValueError as e:
        raise ConfigError(f"config key '{key}': {e}") from e


# key -> (config area, attribute, type)
_KEY_MAP: dict[str, tuple[str, str, type]] = {
    "seed": ("root", "seed", int),
    "out_dir": ("root", "out_dir", str),
    "optimizer": ("root", "optimizer", str),
    "run_id": ("root", "run_id", str),
    "data.kind": ("data", "kind", str),
    "data.n": ("data", "n", int),
    "data.dim": ("data", "dim", int),
    "data.classes": ("data", "classes", int),
    "data.spread": ("data", "spread", float),
    "data.spiral_noise": ("data", "spiral_noise", float),
    "data.noise_rate": ("data", "noise_rate", float),
    "data.test_fraction": ("data", "test_fraction", float),
    "data.seed": ("data", "seed", int),
    "data.noise_seed": ("data", "noise_seed", int),
    "data.csv_path": ("data", "csv_path", str),
    "data.csv_header": ("data", "csv_header", bool),
    "data.csv_scale": ("data", "csv_scale", bool),
    "model.hidden": ("root", "hidden_dim", int),
    "loss.entropy_weight": ("loss", "entropy_weight", float),
    "train.epochs": ("root", "epochs", int),
    "train.batch": ("root", "batch_size", int),
    "train.drop_last": ("root", "drop_last", bool),
    "zeta.eta": ("zeta", "eta", float),
    "zeta.s_min": ("zeta", "s_min", float),
    "zeta.s_max": ("zeta", "s_max", float),
    "zeta.beta1": ("zeta", "beta1", float),
    "zeta.beta2": ("zeta", "beta2", float),
    "zeta.epsilon": ("zeta", "epsilon", float),
    "zeta.clip_bound": ("zeta", "clip_bound", float),
    "zeta.base_damp": ("zeta", "base_damp", float),
    "zeta.adam_mix": ("zeta", "adam_mix", float),
    "zeta.weight_decay": ("zeta", "weight_decay", float),
    "zeta.sam_rho": ("zeta", "sam_rho", float),
    "adam.eta": ("adam", "eta", float),
    "adam.beta1": ("adam", "beta1", float),
    "adam.beta2": ("adam", "beta2", float),
    "adam.epsilon": ("adam", "epsilon", float),
}


def build_experiment_config(
    kv: dict[str, str],
    out_dir: str | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """Turn parsed key-value pairs into a validated ExperimentConfig.

    `out_dir` and `seed` are CLI overrides; the ZETA_OPT_SEED environment
    variable, when set, overrides the seed from any source.  Unknown keys
    are rejected.
    """
    areas: dict[str, dict] = {"root": {}, "data": {}, "loss": {}, "zeta": {}, "adam": {}}
    for key, value in kv.items():
        if key == "data.noise_rates":
            try:
                rates = tuple(float(p) for p in value.split(",") if p.strip())
            except ValueError as e:
                raise ConfigError(f"config key 'data.noise_rates': {e}") from e
            if not rates:
                raise ConfigError("config key 'data.noise_rates': empty list")
            areas["root"]["noise_rates"] = rates
            continue
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown config key {key!r}")
        area, attr, typ = _KEY_MAP[key]
        areas[area][attr] = _convert(key, value, typ)

    try:
        data = DataSpec(**areas["data"])
        loss = LossConfig(**areas["loss"])
        zeta_hp = ZetaHyperParams(**areas["zeta"])
        adam_hp = AdamHyperParams(**areas["adam"])
        cfg = ExperimentConfig(
            data=data, loss=loss, zeta=zeta_hp, adam=adam_hp, **areas["root"]
        )
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid configuration: {e}") from e

    if out_dir is not None:
        cfg = replace(cfg, out_dir=str(out_dir))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV_VAR}={env_seed!r}: {e}") from e

    if cfg.data.kind not in ("blobs", "spirals", "csv"):
        raise ConfigError(f"data.kind must be blobs|spirals|csv, got {cfg.data.kind!r}")
    if cfg.data.kind == "csv" and not cfg.data.csv_path:
        raise ConfigError("data.kind = csv requires data.csv_path")
    return cfg


def default_compare_config() -> ExperimentConfig:
    """Built-in comparison defaults, mirrored by configs/compare_blobs.cfg."""
    return ExperimentConfig()
