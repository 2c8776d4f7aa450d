"""Multi-user uplink: MRC combining, SINR and achievable rate.

Noise power is fixed to 1 and each UE channel carries its receive SNR in its
scale (``|beta|**2 P / sigma**2``), so every transmit power below is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .beampattern import gain_direct
from .channel import ChannelRealization, OneRingParams, draw_one_ring_paths
from .errors import ConfigError
from .geometry import ArrayGeometry, steering_matrix

__all__ = [
    "UE",
    "UplinkScenario",
    "RateResult",
    "db_to_linear",
    "mrc_combiner",
    "correlation",
    "sinr_general",
    "sinr_los_closed_form",
    "mrc_sinrs",
    "achievable_rate",
    "draw_ue_paths",
    "compose_channels",
    "channel_matrix",
    "evaluate_rates",
]

ROLES = ("comm", "loc")
CHANNEL_MODES = ("los", "one_ring")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class UE:
    """A user: its role, LoS angle (or ring-centre azimuth) in radians and receive SNR in dB."""

    role: str
    angle: float
    receive_snr_db: float = 20.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"UE role must be one of {ROLES}, got {self.role!r}")
        if not abs(self.angle) < math.pi / 2:
            raise ConfigError("UE angle must lie in (-pi/2, pi/2)")

    @property
    def receive_snr(self) -> float:
        return db_to_linear(self.receive_snr_db)


@dataclass(frozen=True)
class UplinkScenario:
    geometry: ArrayGeometry
    ues: tuple[UE, ...]
    channel_mode: str = "los"
    ring: OneRingParams = field(default_factory=OneRingParams)
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ues", tuple(self.ues))
        if len(self.ues) < 1:
            raise ConfigError("a scenario needs at least one UE")
        if self.channel_mode not in CHANNEL_MODES:
            raise ConfigError(f"channel_mode must be one of {CHANNEL_MODES}, got {self.channel_mode!r}")
        if self.noise_power != 1.0:
            raise ConfigError("noise power is normalized to 1")

    @property
    def k(self) -> int:
        return len(self.ues)

    @property
    def comm_indices(self) -> list[int]:
        return [i for i, u in enumerate(self.ues) if u.role == "comm"]

    @property
    def loc_indices(self) -> list[int]:
        return [i for i, u in enumerate(self.ues) if u.role == "loc"]

    def with_geometry(self, geom: ArrayGeometry) -> "UplinkScenario":
        return replace(self, geometry=geom)


def mrc_combiner(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    norm = np.linalg.norm(h)
    if norm == 0:
        raise ValueError("MRC combiner is undefined for a zero channel")
    return h / norm


def correlation(h_k, h_i) -> float:
    """Squared correlation coefficient ``|h_k^H h_i|**2 / (|h_k|**2 |h_i|**2)``."""
    h_k = np.asarray(h_k, dtype=complex)
    h_i = np.asarray(h_i, dtype=complex)
    return float(abs(np.vdot(h_k, h_i)) ** 2 / (np.vdot(h_k, h_k).real * np.vdot(h_i, h_i).real))


def sinr_general(k: int, combiners: Sequence, channels: Sequence, powers=None, noise_power: float = 1.0) -> float:
    """SINR of UE ``k`` for arbitrary unit-norm combiners.

    ``P_k |v_k^H h_k|^2 / (sum_{i != k} P_i |v_k^H h_i|^2 + noise)``; with the
    normalized channels used throughout the package all powers are 1.
    """
    v = np.asarray(combiners[k], dtype=complex)
    hs = [np.asarray(h, dtype=complex) for h in channels]
    p = np.ones(len(hs)) if powers is None else np.asarray(powers, dtype=float)
    terms = np.array([abs(np.vdot(v, h)) ** 2 for h in hs]) * p
    interference = terms.sum() - terms[k]
    return float(terms[k] / (interference + noise_power))


def sinr_los_closed_form(k: int, angles: Sequence[float], snrs: Sequence[float], geometry: ArrayGeometry) -> float:
    """MRC SINR for single-path LoS UEs, ``snr_k M / (M sum_{i != k} snr_i rho_ki + 1)``.

    ``snrs`` are linear receive SNRs; ``rho_ki`` is the beam pattern evaluated
    at ``sin(theta_k) - sin(theta_i)``.
    """
    m = geometry.size
    s = np.sin(np.asarray(angles, dtype=float))
    snrs = np.asarray(snrs, dtype=float)
    interference = 0.0
    for i in range(len(s)):
        if i != k:
            interference += snrs[i] * gain_direct(geometry, s[k] - s[i])
    return float(snrs[k] * m / (m * interference + 1.0))


def mrc_sinrs(H: np.ndarray) -> np.ndarray:
    """MRC SINR of every column of the ``M x K`` channel matrix ``H`` at once."""
    norms = np.linalg.norm(H, axis=0)
    V = H / norms
    C = np.abs(V.conj().T @ H) ** 2
    signal = np.diag(C)
    return signal / (C.sum(axis=1) - signal + 1.0)


def achievable_rate(sinr):
    """``log2(1 + sinr)`` in bit/s/Hz."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    out = np.log2(1.0 + sinr)
    return float(out) if out.ndim == 0 else out


def draw_ue_paths(ues: Sequence[UE], channel_mode: str, ring: OneRingParams, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """Geometry-free path draws ``(angles, gains)`` for each UE.

    Localization UEs are always single-path LoS; communication UEs follow
    ``channel_mode``.  LoS gains are real ``sqrt(snr)`` so a LoS UE contributes
    no randomness.
    """
    rng = np.random.default_rng(rng)
    paths = []
    for ue in ues:
        if channel_mode == "one_ring" and ue.role == "comm":
            params = replace(ring, center_angle=ue.angle)
            paths.append(draw_one_ring_paths(params, rng, ue.receive_snr))
        else:
            paths.append((np.array([ue.angle]), np.array([math.sqrt(ue.receive_snr) + 0j])))
    return paths


def compose_channels(geom: ArrayGeometry, paths, los_angles=None) -> list[ChannelRealization]:
    out = []
    for idx, (angles, gains) in enumerate(paths):
        los = angles[0] if los_angles is None else los_angles[idx]
        out.append(ChannelRealization.from_paths(geom, angles, gains, los))
    return out


def channel_matrix(geom: ArrayGeometry, paths) -> np.ndarray:
    """``M x K`` matrix of composed channels, one column per UE (no per-path bookkeeping)."""
    angles = np.concatenate([a for a, _ in paths])
    gains = np.concatenate([g for _, g in paths])
    starts = np.cumsum([0] + [len(a) for a, _ in paths[:-1]])
    return np.add.reduceat(steering_matrix(geom, angles) * gains, starts, axis=1)


@dataclass(frozen=True)
class RateResult:
    sinr: np.ndarray
    rates: np.ndarray

    @property
    def mean_rate(self) -> float:
        return float(self.rates.mean()) if self.rates.size else 0.0

    @property
    def sum_rate(self) -> float:
        return float(self.rates.sum())


def evaluate_rates(channels, comm_indices: Sequence[int]) -> RateResult:
    """MRC rates of the communication UEs; every other UE counts as interference.

    ``channels`` is either an ``M x K`` matrix or a sequence of realizations.
    """
    if isinstance(channels, np.ndarray):
        H = channels
    else:
        H = np.column_stack([c.h for c in channels])
    sinr = mrc_sinrs(H)[list(comm_indices)]
    return RateResult(sinr, achievable_rate(sinr))
