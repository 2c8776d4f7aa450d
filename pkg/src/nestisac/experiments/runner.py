"""Monte Carlo drivers for the comparison experiments.

Every trial ``t`` draws from generators seeded by
``SeedSequence(seed, spawn_key=(t, stream))``: stream 0 for UE angles, 1 for
channel paths, 2 for symbols and noise.  Path draws do not depend on the array,
so the nested and ULA arms of a trial see the same UEs, channels and noise and
architecture comparisons are paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import OneRingParams
from ..comm import UE, UplinkScenario, channel_matrix, compose_channels, draw_ue_paths, evaluate_rates
from ..errors import ConfigError, UnderResolutionError
from ..geometry import ArrayGeometry, build_nested, build_ula, difference_coarray, parse_geometry
from ..sensing import cancel_comm, estimate_doa, rmse, sample_covariance, simulate_snapshots
from .config import ExperimentConfig

STREAM_ANGLES, STREAM_PATHS, STREAM_SNAPSHOTS = 0, 1, 2


@dataclass
class ResultTable:
    """Rows destined for CSV plus per-trial samples kept for statistics."""

    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, stream)))


def ring_params(cfg: ExperimentConfig) -> OneRingParams:
    return OneRingParams(cfg.num_paths, cfg.ring_radius_m, cfg.center_range_m, cfg.rician_factor_db)


def draw_trial(cfg: ExperimentConfig, trial: int, theta_max_deg: float):
    """UEs (first ``k_c`` communicate) with angles uniform in ``[-theta_max, theta_max]`` and their paths."""
    half = math.radians(theta_max_deg)
    angles = trial_rng(cfg.seed, trial, STREAM_ANGLES).uniform(-half, half, cfg.k)
    ues = [UE("comm" if i < cfg.k_c else "loc", float(a), cfg.receive_snr_db) for i, a in enumerate(angles)]
    paths = draw_ue_paths(ues, cfg.channel_mode, ring_params(cfg), trial_rng(cfg.seed, trial, STREAM_PATHS))
    return ues, paths


def trial_rate(geom: ArrayGeometry, ues, paths) -> tuple[float, float]:
    res = evaluate_rates(channel_matrix(geom, paths), [i for i, u in enumerate(ues) if u.role == "comm"])
    return res.mean_rate, res.sum_rate


def trial_doa(cfg: ExperimentConfig, geom: ArrayGeometry, coarray, ues, paths, trial: int):
    """Estimated L-UE angles for one trial, or ``None`` when the estimator under-resolves."""
    scenario = UplinkScenario(geom, ues, cfg.channel_mode, ring_params(cfg))
    batch = simulate_snapshots(scenario, cfg.snapshots, trial_rng(cfg.seed, trial, STREAM_SNAPSHOTS),
                               channels=compose_channels(geom, paths))
    R = sample_covariance(cancel_comm(batch))
    try:
        return estimate_doa(R, coarray, cfg.k_l, cfg.grid_size).angles, batch.truth
    except UnderResolutionError:
        return None, batch.truth


def _arm(cfg: ExperimentConfig, geom: ArrayGeometry, theta_max_deg: float, draws=None):
    """Rates for all trials and DoA estimates for the first ``sensing_trials`` trials."""
    mean = np.empty(cfg.trials)
    total = np.empty(cfg.trials)
    estimates, truths = [], []
    coarray = difference_coarray(geom)
    for t in range(cfg.trials):
        ues, paths = draws[t] if draws is not None else draw_trial(cfg, t, theta_max_deg)
        mean[t], total[t] = trial_rate(geom, ues, paths)
        if t < cfg.sensing_trials and cfg.k_l > 0:
            est, truth = trial_doa(cfg, geom, coarray, ues, paths, t)
            estimates.append(est)
            truths.append(np.asarray(truth))
    err = rmse(estimates, truths) if estimates else None
    return mean, total, err


def _rmse_fields(err) -> list:
    if err is None:
        return [math.nan, math.nan, math.nan]
    return [err.rmse_deg, err.median_deg, err.failure_rate]


def _paired(diff: np.ndarray) -> tuple[float, float]:
    n = diff.size
    se = float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return float(diff.mean()), se


def _draws(cfg: ExperimentConfig, theta_max_deg: float):
    return [draw_trial(cfg, t, theta_max_deg) for t in range(cfg.trials)]


def run_fig3(cfg: ExperimentConfig) -> ResultTable:
    """Sweep N1 = 0..M with N2 = M - N1 against the compact ULA of the same size."""
    if cfg.experiment != "fig3_n1_sweep":
        raise ConfigError("experiment: run_fig3 needs fig3_n1_sweep")
    draws = _draws(cfg, cfg.theta_max_deg)
    ula_mean, ula_sum, ula_err = _arm(cfg, build_ula(cfg.m), cfg.theta_max_deg, draws)
    columns = ["n1", "n2", "mean_rate_per_ue", "sum_rate", "rmse_deg", "trials",
               "rmse_median_deg", "doa_failure_rate", "ula_mean_rate_per_ue", "ula_sum_rate",
               "ula_rmse_deg", "paired_rate_diff_mean", "paired_rate_diff_se"]
    rows, per_trial = [], {}
    for n1 in range(cfg.m + 1):
        n2 = cfg.m - n1
        mean, total, err = _arm(cfg, build_nested(n1, n2), cfg.theta_max_deg, draws)
        per_trial[n1] = mean
        d_mean, d_se = _paired(mean - ula_mean)
        e = _rmse_fields(err)
        rows.append([n1, n2, float(mean.mean()), float(total.mean()), e[0], cfg.trials, e[1], e[2],
                     float(ula_mean.mean()), float(ula_sum.mean()), _rmse_fields(ula_err)[0], d_mean, d_se])
    return ResultTable(columns, rows, {"baseline": f"ula:{cfg.m}"},
                       {"nested_mean_rate": per_trial, "ula_mean_rate": ula_mean})


def _fig4_nested(cfg: ExperimentConfig, m: int) -> ArrayGeometry:
    n1 = m // 2 if cfg.nested_n1 is None else cfg.nested_n1
    return build_nested(n1, m - n1)


def run_fig4(cfg: ExperimentConfig) -> ResultTable:
    """Rate versus M for each UE spread, nested (default N1 = N2 = M/2) against ULA."""
    if cfg.experiment != "fig4_m_sweep":
        raise ConfigError("experiment: run_fig4 needs fig4_m_sweep")
    columns = ["m", "theta_max", "arch", "mean_rate", "sum_rate", "geometry", "trials",
               "paired_rate_diff_mean", "paired_rate_diff_se"]
    rows, samples = [], {}
    for theta in cfg.theta_max_values:
        draws = _draws(cfg, theta)
        for m in cfg.m_values:
            nested = _fig4_nested(cfg, m)
            ula = build_ula(m)
            n_mean, n_sum, _ = _arm(cfg, nested, theta, draws)
            u_mean, u_sum, _ = _arm(cfg, ula, theta, draws)
            d_mean, d_se = _paired(n_mean - u_mean)
            samples[(theta, m)] = (n_mean, u_mean)
            rows.append([m, theta, "nested", float(n_mean.mean()), float(n_sum.mean()), nested.to_text(),
                         cfg.trials, d_mean, d_se])
            rows.append([m, theta, "ula", float(u_mean.mean()), float(u_sum.mean()), ula.to_text(),
                         cfg.trials, "", ""])
    nested_rule = "N1=N2=M/2" if cfg.nested_n1 is None else f"N1={cfg.nested_n1}"
    return ResultTable(columns, rows, {"nested_config": nested_rule}, samples)


def predicted_crossing(theta_max_deg: float, m_values, span: str = "sector") -> int | None:
    """Smallest swept M whose first outer grating lobe ``2/(M/2 + 1)`` enters the UE region.

    ``span="sector"`` compares against ``sin(theta_max)`` (a lobe of a beam at
    broadside landing inside the sector); ``span="pair"`` compares against the
    largest UE-pair separation ``2 sin(theta_max)``.  Candidate M runs over
    all even values up to the largest swept M, so the result may precede the
    sweep.
    """
    limit = math.sin(math.radians(theta_max_deg)) * (2.0 if span == "pair" else 1.0)
    for m in range(2, max(m_values) + 1, 2):
        if 2.0 / (m // 2 + 1) < limit:
            return m
    return None


def observed_crossing(m_values, diff) -> float | None:
    """First zero of the nested-minus-ULA rate curve, linearly interpolated between sweep points."""
    for (m0, d0), (m1, d1) in zip(zip(m_values, diff), zip(m_values[1:], diff[1:])):
        if d0 == 0:
            return float(m0)
        if (d0 > 0) != (d1 > 0):
            return float(m0 + (m1 - m0) * d0 / (d0 - d1))
    return None


def run_fig5(cfg: ExperimentConfig) -> ResultTable:
    """Sensing-first nested arrays (N1 = N2 = M/2) against the ULA: rate and RMSE versus M."""
    if cfg.experiment != "fig5_sensing_first":
        raise ConfigError("experiment: run_fig5 needs fig5_sensing_first")
    columns = ["m", "arch", "mean_rate", "rmse_deg", "sum_rate", "rmse_median_deg", "doa_failure_rate",
               "trials", "paired_rate_diff_mean", "paired_rate_diff_se"]
    draws = _draws(cfg, cfg.theta_max_deg)
    rows, samples, diffs = [], {}, []
    for m in cfg.m_values:
        arms = {"nested": build_nested(m // 2, m // 2), "ula": build_ula(m)}
        res = {name: _arm(cfg, g, cfg.theta_max_deg, draws) for name, g in arms.items()}
        d_mean, d_se = _paired(res["nested"][0] - res["ula"][0])
        diffs.append(d_mean)
        samples[m] = res
        for name, (mean, total, err) in res.items():
            e = _rmse_fields(err)
            paired = [d_mean, d_se] if name == "nested" else ["", ""]
            rows.append([m, name, float(mean.mean()), e[0], float(total.mean()), e[1], e[2], cfg.trials] + paired)
    obs = observed_crossing(list(cfg.m_values), diffs)
    meta = {
        "observed_crossing_m": "none" if obs is None else f"{obs:.6g}",
        "predicted_crossing_m_sector": str(predicted_crossing(cfg.theta_max_deg, cfg.m_values, "sector")),
        "predicted_crossing_m_pair": str(predicted_crossing(cfg.theta_max_deg, cfg.m_values, "pair")),
    }
    return ResultTable(columns, rows, meta, samples)


def run_custom(cfg: ExperimentConfig) -> ResultTable:
    """Any geometry against the same-size ULA, paired trial by trial."""
    if cfg.experiment != "custom":
        raise ConfigError("experiment: run_custom needs custom")
    geom = parse_geometry(cfg.geometry)
    draws = _draws(cfg, cfg.theta_max_deg)
    arms = [("test", geom), ("ula", build_ula(geom.size))]
    columns = ["arch", "geometry", "mean_rate", "sum_rate", "rmse_deg", "rmse_median_deg",
               "doa_failure_rate", "trials", "paired_rate_diff_mean", "paired_rate_diff_se"]
    res = {name: _arm(cfg, g, cfg.theta_max_deg, draws) for name, g in arms}
    d_mean, d_se = _paired(res["test"][0] - res["ula"][0])
    rows = []
    for name, g in arms:
        mean, total, err = res[name]
        paired = [d_mean, d_se] if name == "test" else ["", ""]
        rows.append([name, g.to_text(), float(mean.mean()), float(total.mean())] + _rmse_fields(err)
                    + [cfg.trials] + paired)
    return ResultTable(columns, rows, {}, res)


RUNNERS = {
    "fig3_n1_sweep": run_fig3,
    "fig4_m_sweep": run_fig4,
    "fig5_sensing_first": run_fig5,
    "custom": run_custom,
}


def run(cfg: ExperimentConfig) -> ResultTable:
    return RUNNERS[cfg.experiment](cfg)
