"""Flat ``key = value`` experiment configuration.

Example::

    # N1 sweep at fixed M
    experiment = fig3_n1_sweep
    m = 16
    theta_max_deg = 3.58
    trials = 2000
    seed = 7

Unset keys take per-experiment defaults (see ``DEFAULTS``).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

from ..errors import ConfigError
from ..geometry import parse_geometry

EXPERIMENTS = ("fig3_n1_sweep", "fig4_m_sweep", "fig5_sensing_first", "custom")

# keys that only say where results go; they do not enter the config hash
_OUTPUT_KEYS = ("output", "plot")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "custom"
    m: int | None = None
    m_values: tuple[int, ...] | None = None
    theta_max_deg: float | None = None
    theta_max_values: tuple[float, ...] | None = None
    k: int | None = None
    k_c: int | None = None
    receive_snr_db: float = 20.0
    channel_mode: str = "one_ring"
    trials: int | None = None
    sensing_trials: int | None = None
    snapshots: int = 1000
    seed: int = 0
    geometry: str | None = None
    nested_n1: int | None = None
    num_paths: int = 10
    ring_radius_m: float = 5.0
    center_range_m: float = 40.0
    rician_factor_db: float = 20.0
    grid_size: int = 4096
    output: str | None = None
    plot: str | None = None

    @property
    def k_l(self) -> int:
        return self.k - self.k_c

    def canonical_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name in _OUTPUT_KEYS:
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


DEFAULTS: dict[str, dict[str, Any]] = {
    "fig3_n1_sweep": dict(m=16, theta_max_deg=3.58, k=7, k_c=6, trials=2000, sensing_trials=200),
    "fig4_m_sweep": dict(m_values=(8, 16, 24, 32, 40, 48, 56, 64), theta_max_values=(5.0, 10.0, 30.0),
                         k=7, k_c=6, trials=500, sensing_trials=0),
    "fig5_sensing_first": dict(m_values=(8, 12, 16, 20, 24, 28, 32), theta_max_deg=18.0, k=7, k_c=4,
                               trials=200),
    "custom": dict(geometry="nested:8,8", theta_max_deg=10.0, k=7, k_c=6, trials=100),
}


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    return str(v)


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    kind = _field_types()[key]
    raw = raw.strip()
    if raw == "" or raw.lower() == "none":
        return None
    try:
        if kind.startswith("tuple[int"):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if kind.startswith("tuple[float"):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config_text(text: str) -> ExperimentConfig:
    known = _field_types()
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return resolve(ExperimentConfig(**values))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def resolve(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill per-experiment defaults for unset keys, then validate."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    updates = {k: v for k, v in DEFAULTS[cfg.experiment].items() if getattr(cfg, k) is None}
    cfg = replace(cfg, **updates)
    if cfg.sensing_trials is None:
        cfg = replace(cfg, sensing_trials=cfg.trials)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.trials is None or cfg.trials < 1:
        raise ConfigError("trials: must be at least 1")
    if cfg.sensing_trials < 0 or cfg.sensing_trials > cfg.trials:
        raise ConfigError("sensing_trials: must lie in [0, trials]")
    if cfg.k is None or cfg.k < 1:
        raise ConfigError("k: need at least one UE")
    if cfg.k_c is None or not 0 <= cfg.k_c <= cfg.k:
        raise ConfigError("k_c: must lie in [0, k]")
    if cfg.snapshots < 1:
        raise ConfigError("snapshots: must be at least 1")
    if cfg.channel_mode not in ("los", "one_ring"):
        raise ConfigError("channel_mode: must be 'los' or 'one_ring'")
    if cfg.grid_size < 180:
        raise ConfigError("grid_size: must be at least 180")
    if cfg.num_paths < 1:
        raise ConfigError("num_paths: must be at least 1")
    if not 0 <= cfg.ring_radius_m < cfg.center_range_m:
        raise ConfigError("ring_radius_m: must be below center_range_m")
    for name in ("theta_max_deg",):
        v = getattr(cfg, name)
        if v is not None and not 0 < v < 90:
            raise ConfigError(f"{name}: must lie in (0, 90)")
    if cfg.theta_max_values is not None:
        if not cfg.theta_max_values or any(not 0 < v < 90 for v in cfg.theta_max_values):
            raise ConfigError("theta_max_values: need values in (0, 90)")
    if cfg.experiment == "fig3_n1_sweep" and (cfg.m is None or cfg.m < 1):
        raise ConfigError("m: must be at least 1")
    if cfg.experiment in ("fig4_m_sweep", "fig5_sensing_first"):
        if not cfg.m_values or any(m < 2 for m in cfg.m_values):
            raise ConfigError("m_values: need a non-empty list of sizes >= 2")
    if cfg.experiment == "fig5_sensing_first" and any(m % 2 for m in cfg.m_values):
        raise ConfigError("m_values: the sensing-first arm needs even M")
    if cfg.nested_n1 is not None and cfg.m_values and any(not 0 <= cfg.nested_n1 <= m for m in cfg.m_values):
        raise ConfigError("nested_n1: must lie in [0, M] for every swept M")
    if cfg.experiment == "custom":
        if not cfg.geometry:
            raise ConfigError("geometry: required for custom experiments")
        parse_geometry(cfg.geometry)
