"""LoS and one-ring multipath channels.

Channels are expressed up to a complex scale: path gains are normalized so that
the expected ``sum |beta|**2`` equals the requested receive SNR (noise power 1),
which is all the SINR expressions downstream need.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import ConfigError
from .geometry import ArrayGeometry, steering_matrix, steering_vector

__all__ = [
    "OneRingParams",
    "ChannelRealization",
    "los_channel",
    "draw_one_ring_paths",
    "one_ring_channel",
    "write_channel_csv",
    "MAX_RICIAN_DB",
]

MAX_RICIAN_DB = 300.0


@dataclass(frozen=True)
class OneRingParams:
    """Ring of scatterers around a UE, seen from an array at the origin.

    The ring centre sits at ``center_range_m`` along azimuth ``center_angle``
    (radians from broadside).  One of the ``num_paths`` paths is the LoS path
    at the centre azimuth; the remaining ones hit scatterers on the ring.
    """

    num_paths: int = 10
    ring_radius_m: float = 5.0
    center_range_m: float = 40.0
    rician_factor_db: float = 20.0
    center_angle: float = 0.0

    def __post_init__(self):
        if self.num_paths < 1:
            raise ConfigError("num_paths must be at least 1")
        if not 0 <= self.ring_radius_m < self.center_range_m:
            raise ConfigError("ring_radius_m must be non-negative and below center_range_m")
        if abs(self.center_angle) >= math.pi / 2:
            raise ConfigError("center_angle must lie in (-pi/2, pi/2)")
        # the whole ring has to stay in front of the array
        if abs(self.center_angle) + self.max_angle_spread >= math.pi / 2:
            raise ConfigError("ring extends beyond endfire for this center_angle")

    @property
    def rician_factor(self) -> float:
        """Linear LoS-to-NLoS power ratio, capped at ``MAX_RICIAN_DB``."""
        return 10.0 ** (min(self.rician_factor_db, MAX_RICIAN_DB) / 10.0)

    @property
    def max_angle_spread(self) -> float:
        return math.asin(self.ring_radius_m / self.center_range_m)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    path_angles: tuple[float, ...]
    path_gains: tuple[complex, ...]
    los_angle: float

    @classmethod
    def from_paths(cls, geom: ArrayGeometry, angles, gains, los_angle: float) -> "ChannelRealization":
        angles = tuple(float(a) for a in angles)
        gains = tuple(complex(b) for b in gains)
        h = steering_matrix(geom, angles) @ np.asarray(gains, dtype=complex)
        return cls(h, angles, gains, float(los_angle))

    def recompose(self, geom: ArrayGeometry) -> np.ndarray:
        """Rebuild ``h = sum_i beta_i a(theta_i)`` from the stored paths."""
        return steering_matrix(geom, self.path_angles) @ np.asarray(self.path_gains, dtype=complex)

    @property
    def power(self) -> float:
        return float(np.vdot(self.h, self.h).real)


def los_channel(geom: ArrayGeometry, angle: float, gain: complex = 1.0) -> ChannelRealization:
    h = complex(gain) * steering_vector(geom, angle)
    return ChannelRealization(h, (float(angle),), (complex(gain),), float(angle))


def draw_one_ring_paths(params: OneRingParams, rng, receive_snr: float = 1.0):
    """Draw path angles and gains for one UE; independent of the array geometry.

    Returns ``(angles, gains)`` with the LoS path first.  Drawing order is
    fixed (LoS phase, scatterer positions, NLoS gains) so a seed reproduces the
    same paths for every array the UE is evaluated against.
    """
    rng = np.random.default_rng(rng)
    k = params.rician_factor
    n_nlos = params.num_paths - 1
    los_power = receive_snr * (k / (k + 1.0) if n_nlos else 1.0)
    los_gain = math.sqrt(los_power) * np.exp(2j * np.pi * rng.random())

    phi = 2.0 * np.pi * rng.random(n_nlos)
    cx = params.center_range_m * math.sin(params.center_angle)
    cy = params.center_range_m * math.cos(params.center_angle)
    sx = cx + params.ring_radius_m * np.cos(phi)
    sy = cy + params.ring_radius_m * np.sin(phi)
    nlos_angles = np.arctan2(sx, sy)

    per_path = receive_snr / ((k + 1.0) * n_nlos) if n_nlos else 0.0
    nlos_gains = math.sqrt(per_path / 2.0) * (rng.standard_normal(n_nlos) + 1j * rng.standard_normal(n_nlos))

    angles = np.concatenate(([params.center_angle], nlos_angles))
    gains = np.concatenate(([los_gain], nlos_gains))
    return angles, gains


def one_ring_channel(geom: ArrayGeometry, params: OneRingParams, rng_seed, receive_snr: float = 1.0) -> ChannelRealization:
    angles, gains = draw_one_ring_paths(params, rng_seed, receive_snr)
    return ChannelRealization.from_paths(geom, angles, gains, params.center_angle)


def write_channel_csv(out: TextIO, realizations: Iterable[ChannelRealization]) -> None:
    """Diagnostic dump with rows ``ue_id,path_idx,angle_rad,gain_re,gain_im``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["ue_id", "path_idx", "angle_rad", "gain_re", "gain_im"])
    for ue, real in enumerate(realizations):
        for idx, (a, b) in enumerate(zip(real.path_angles, real.path_gains)):
            w.writerow([ue, idx, repr(a), repr(b.real), repr(b.imag)])
