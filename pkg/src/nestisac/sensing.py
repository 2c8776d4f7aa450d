"""Co-array DoA estimation for localization UEs.

Pipeline: snapshots -> (genie) removal of communication signals -> sample
covariance -> lag-averaged virtual ULA signal -> spatial smoothing -> MUSIC on
the virtual ULA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelRealization
from .comm import UplinkScenario, compose_channels, draw_ue_paths
from .errors import ConfigError, UnderResolutionError
from .geometry import ArrayGeometry, CoArray, steering_matrix

__all__ = [
    "SnapshotBatch",
    "VirtualSignal",
    "DoaEstimate",
    "RmseResult",
    "qpsk_symbols",
    "simulate_snapshots",
    "cancel_comm",
    "sample_covariance",
    "exact_covariance",
    "coarray_signal",
    "spatial_smoothing",
    "doa_music",
    "rmse",
    "estimate_doa",
]

DEFAULT_GRID = 4096


@dataclass(frozen=True)
class SnapshotBatch:
    """``M x T`` received samples with the genie knowledge needed to cancel C-UEs.

    ``comm_channels`` is ``M x K_c`` and ``comm_symbols`` is ``K_c x T``; their
    product is the exact communication contribution to ``samples``.
    """

    samples: np.ndarray
    truth: tuple[float, ...]
    comm_channels: np.ndarray
    comm_symbols: np.ndarray

    @property
    def num_snapshots(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class VirtualSignal:
    z: np.ndarray
    lags: np.ndarray
    counts: np.ndarray

    @property
    def half_length(self) -> int:
        """``Lv``: the number of non-negative lags."""
        return (self.z.size + 1) // 2


@dataclass(frozen=True)
class DoaEstimate:
    angles: np.ndarray
    grid_angles: np.ndarray
    spectrum: np.ndarray

    @property
    def num_sources(self) -> int:
        return self.angles.size


def qpsk_symbols(rng: np.random.Generator, shape) -> np.ndarray:
    bits = rng.integers(0, 4, size=shape)
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * bits))


def simulate_snapshots(
    scenario: UplinkScenario,
    num_snapshots: int,
    rng_seed,
    channels: Sequence[ChannelRealization] | None = None,
) -> SnapshotBatch:
    """``y[t] = sum_i h_i x_i[t] + n[t]`` with unit-power QPSK symbols and unit noise.

    When ``channels`` is omitted the UE channels are drawn from the same
    generator before the symbols and noise.
    """
    if num_snapshots < 1:
        raise ConfigError("need at least one snapshot")
    rng = np.random.default_rng(rng_seed)
    geom = scenario.geometry
    if channels is None:
        paths = draw_ue_paths(scenario.ues, scenario.channel_mode, scenario.ring, rng)
        channels = compose_channels(geom, paths)
    if len(channels) != scenario.k:
        raise ConfigError("one channel per UE is required")
    H = np.column_stack([c.h for c in channels])
    x = qpsk_symbols(rng, (scenario.k, num_snapshots))
    noise = (rng.standard_normal((geom.size, num_snapshots))
             + 1j * rng.standard_normal((geom.size, num_snapshots))) / math.sqrt(2.0)
    y = H @ x + noise
    comm = scenario.comm_indices
    truth = tuple(sorted(scenario.ues[i].angle for i in scenario.loc_indices))
    return SnapshotBatch(y, truth, H[:, comm], x[comm, :])


def cancel_comm(batch: SnapshotBatch, comm_channels=None, comm_symbols=None) -> SnapshotBatch:
    """Subtract the known communication contribution, leaving L-UE signals plus noise."""
    Hc = batch.comm_channels if comm_channels is None else np.asarray(comm_channels)
    Xc = batch.comm_symbols if comm_symbols is None else np.asarray(comm_symbols)
    M, T = batch.samples.shape
    if Hc.size == 0:
        return batch
    residual = batch.samples - Hc @ Xc
    return SnapshotBatch(residual, batch.truth, np.zeros((M, 0), complex), np.zeros((0, T), complex))


def sample_covariance(batch) -> np.ndarray:
    """``(1/T) sum_t y_t y_t^H`` for a batch or a raw ``M x T`` matrix."""
    Y = batch.samples if isinstance(batch, SnapshotBatch) else np.asarray(batch, dtype=complex)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise ConfigError("samples must be an M x T matrix with T >= 1")
    R = Y @ Y.conj().T / Y.shape[1]
    return 0.5 * (R + R.conj().T)


def exact_covariance(geom: ArrayGeometry, angles, powers, noise_power: float = 1.0) -> np.ndarray:
    """Model covariance ``A diag(powers) A^H + noise I``."""
    A = steering_matrix(geom, angles)
    p = np.broadcast_to(np.asarray(powers, dtype=float), (A.shape[1],))
    return (A * p) @ A.conj().T + noise_power * np.eye(geom.size)


def coarray_signal(R: np.ndarray, coarray: CoArray) -> VirtualSignal:
    """Average ``R[i, j]`` over every pair at each lag of the contiguous segment.

    Negative lags use the swapped pairs, so a Hermitian ``R`` yields
    ``z(-l) == conj(z(l))``.
    """
    R = np.asarray(R)
    m = len(coarray.pair_map[0])
    if R.shape != (m, m):
        raise ConfigError(f"covariance is {R.shape}, co-array expects {(m, m)}")
    L = coarray.contiguous_extent
    lags = np.arange(-(L - 1), L)
    z = np.empty(lags.size, dtype=complex)
    counts = np.empty(lags.size, dtype=int)
    for n, lag in enumerate(lags):
        pairs = np.asarray(coarray.pair_map[abs(int(lag))])
        if lag >= 0:
            z[n] = R[pairs[:, 0], pairs[:, 1]].mean()
        else:
            z[n] = R[pairs[:, 1], pairs[:, 0]].mean()
        counts[n] = len(pairs)
    return VirtualSignal(z, lags, counts)


def spatial_smoothing(vs: VirtualSignal) -> np.ndarray:
    """Average of the ``Lv`` overlapping length-``Lv`` subvector outer products."""
    lags = np.asarray(vs.lags)
    if lags.size % 2 != 1 or np.any(np.diff(lags) != 1) or lags[0] != -lags[-1]:
        raise ConfigError("spatial smoothing needs a contiguous, symmetric lag range")
    L = vs.half_length
    # row i of the stack is the subvector spanning lags i-(L-1) .. i
    idx = np.arange(L)[:, None] + np.arange(L)[None, :]
    Z = vs.z[idx]
    return Z.T @ Z.conj() / L


def _null_spectrum(En: np.ndarray, Es: np.ndarray, Av: np.ndarray) -> np.ndarray:
    if En.shape[1] <= Es.shape[1]:
        return np.sum(np.abs(En.conj().T @ Av) ** 2, axis=0)
    d = Av.shape[0] - np.sum(np.abs(Es.conj().T @ Av) ** 2, axis=0)
    return np.maximum(d, np.finfo(float).tiny)


def doa_music(R_ss: np.ndarray, num_sources: int, grid_size: int = DEFAULT_GRID) -> DoaEstimate:
    """MUSIC on a virtual ULA with half-wavelength spacing.

    The pseudo-spectrum ``1 / |E_n^H a(u)|**2`` is evaluated on a uniform grid
    of ``u = sin(theta)`` in ``[-1, 1]``.  The ``num_sources`` highest local
    maxima are kept and each is refined by fitting a parabola through the null
    spectrum at the peak and its two neighbours.

    Raises:
        UnderResolutionError: ``num_sources`` is not below the virtual ULA size,
            or fewer local maxima than sources exist.
    """
    R_ss = np.asarray(R_ss)
    L = R_ss.shape[0]
    if grid_size < 180:
        raise ConfigError("grid_size must be at least 180")
    if num_sources < 1:
        raise ConfigError("num_sources must be positive")
    u = np.linspace(-1.0, 1.0, grid_size)
    grid_angles = np.arcsin(u)
    if num_sources >= L:
        raise UnderResolutionError(
            f"{num_sources} sources need a virtual ULA longer than {L}", [], num_sources)
    _, vecs = np.linalg.eigh(R_ss)
    Es = vecs[:, L - num_sources:]
    En = vecs[:, : L - num_sources]
    Av = np.exp(1j * np.pi * np.outer(np.arange(L), u))
    d = _null_spectrum(En, Es, Av)
    spectrum = 1.0 / d

    peaks = np.flatnonzero((spectrum[1:-1] > spectrum[:-2]) & (spectrum[1:-1] >= spectrum[2:])) + 1
    peaks = peaks[np.argsort(spectrum[peaks])[::-1]]
    if peaks.size < num_sources:
        found = np.sort(grid_angles[peaks])
        raise UnderResolutionError(
            f"found {peaks.size} spectral peaks, expected {num_sources}", found, num_sources)
    step = u[1] - u[0]
    refined = []
    for k in peaks[:num_sources]:
        dm, d0, dp = d[k - 1], d[k], d[k + 1]
        curv = dm - 2.0 * d0 + dp
        shift = 0.5 * (dm - dp) / curv if curv > 0 else 0.0
        refined.append(u[k] + step * float(np.clip(shift, -1.0, 1.0)))
    angles = np.sort(np.arcsin(np.clip(refined, -1.0, 1.0)))
    return DoaEstimate(angles, grid_angles, spectrum)


def estimate_doa(R: np.ndarray, coarray: CoArray, num_sources: int, grid_size: int = DEFAULT_GRID) -> DoaEstimate:
    """Covariance to DoA estimate through the co-array pipeline."""
    return doa_music(spatial_smoothing(coarray_signal(R, coarray)), num_sources, grid_size)


@dataclass(frozen=True)
class RmseResult:
    rmse_deg: float
    per_trial_deg: np.ndarray
    failures: int
    trials: int

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def median_deg(self) -> float:
        return float(np.median(self.per_trial_deg)) if self.per_trial_deg.size else math.nan


def rmse(estimates: Sequence, truth) -> RmseResult:
    """Angular RMSE in degrees over all sources and successful trials.

    ``estimates`` holds one entry per trial: an array of angles (radians) or
    ``None`` for a trial whose estimator failed.  ``truth`` is either one array
    shared by all trials or one array per trial.  Pairing is by sorted order; a
    trial with the wrong number of estimates counts as failed.  Failed trials
    are left out of ``rmse_deg`` and enter ``per_trial_deg`` as ``inf``, so the
    median treats them as the worst outcomes.
    """
    n = len(estimates)
    truth_list = truth if (len(truth) == n and n and np.ndim(truth[0]) == 1) else [truth] * n
    sq, per_trial, failures = [], [], 0
    for est, tru in zip(estimates, truth_list):
        if est is None or len(est) != len(tru):
            failures += 1
            per_trial.append(math.inf)
            continue
        err = np.degrees(np.sort(np.asarray(est, float)) - np.sort(np.asarray(tru, float)))
        sq.append(err**2)
        per_trial.append(math.sqrt(float(np.mean(err**2))))
    total = math.sqrt(float(np.mean(np.concatenate(sq)))) if sq else math.nan
    return RmseResult(total, np.asarray(per_trial), failures, n)
