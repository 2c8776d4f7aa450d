"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import replace

import numpy as np

from ..beampattern import metrics, pattern_samples
from ..comm import UE, UplinkScenario
from ..errors import ConfigError, NumericalError, UnderResolutionError
from ..geometry import build_nested, difference_coarray, parse_geometry
from ..sensing import cancel_comm, estimate_doa, sample_covariance, simulate_snapshots
from .config import ExperimentConfig, load_config, resolve
from .output import csv_text, format_value, table_csv, write_svg
from .runner import STREAM_SNAPSHOTS, run, trial_rng

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    """Raise ConfigError on bad usage so ``main`` maps it to exit code 2."""

    def error(self, message):
        raise ConfigError(message)


def _args_hash(args: argparse.Namespace, skip=("out", "plot", "func", "command")) -> str:
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip)
    text = "\n".join(f"{k} = {v}" for k, v in items) + "\n"
    return hashlib.sha256(text.encode()).hexdigest()


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _positive(name):
    def parse(raw):
        try:
            v = int(raw)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return v
    return parse


def cmd_beam_metrics(args) -> int:
    build_nested(args.n1, args.n2)  # validates sizes
    rec = metrics(args.n1, args.n2)
    if args.csv:
        items = rec.scalar_items()
        _emit(csv_text([k for k, _ in items], [[v for _, v in items]], _args_hash(args)), None)
    else:
        d = rec.to_dict()
        sys.stdout.write(json.dumps(d, indent=2, default=format_value, allow_nan=True) + "\n")
    return EXIT_OK


def cmd_beam_pattern(args) -> int:
    geom = build_nested(args.n1, args.n2)
    delta, gain = pattern_samples(geom, args.samples)
    _emit(csv_text(["delta", "gain"], zip(delta.tolist(), gain.tolist()), _args_hash(args)), args.out)
    return EXIT_OK


def cmd_simulate_rate(args) -> int:
    cfg = ExperimentConfig(
        experiment="custom", geometry=args.geometry, theta_max_deg=args.theta_max, k=args.k, k_c=args.k_c,
        receive_snr_db=args.snr_db, channel_mode=args.channel, trials=args.trials,
        sensing_trials=args.sensing_trials, snapshots=args.snapshots, seed=args.seed,
    )
    return _run_config(resolve(cfg), args.out, args.plot)


def cmd_simulate_doa(args) -> int:
    geom = parse_geometry(args.geometry)
    try:
        truth_deg = [float(s) for s in args.sources.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("--sources: expected comma-separated degrees") from None
    if not truth_deg:
        raise ConfigError("--sources: need at least one angle")
    if any(not abs(a) < 90 for a in truth_deg):
        raise ConfigError("--sources: angles must lie in (-90, 90)")
    coarray = difference_coarray(geom)
    if len(truth_deg) >= coarray.contiguous_extent:
        raise UnderResolutionError(
            f"{len(truth_deg)} sources need more than {coarray.contiguous_extent} virtual elements",
            [], len(truth_deg))
    ues = [UE("loc", math.radians(a), args.snr_db) for a in truth_deg]
    scenario = UplinkScenario(geom, ues, "los")
    truth_sorted = sorted(truth_deg)
    rows = []
    failures = 0
    for t in range(args.trials):
        batch = simulate_snapshots(scenario, args.snapshots, trial_rng(args.seed, t, STREAM_SNAPSHOTS))
        try:
            est = np.degrees(estimate_doa(sample_covariance(cancel_comm(batch)), coarray,
                                          len(truth_deg), args.grid_size).angles).tolist()
        except UnderResolutionError:
            failures += 1
            est = [math.nan] * len(truth_deg)
        for i, (tru, e) in enumerate(zip(truth_sorted, est)):
            rows.append([t, i, tru, e])
    meta = {"geometry": geom.to_text(), "failed_trials": failures}
    _emit(csv_text(["trial", "source_idx", "true_deg", "est_deg"], rows, _args_hash(args), meta), args.out)
    return EXIT_OK


def _run_config(cfg: ExperimentConfig, out, plot) -> int:
    table = run(cfg)
    _emit(table_csv(table, cfg.config_hash()), out)
    if plot:
        write_svg(table, cfg.experiment, plot)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
        if cfg.sensing_trials is not None and cfg.sensing_trials > args.trials:
            overrides["sensing_trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = resolve(replace(cfg, **overrides))
    return _run_config(cfg, args.out or cfg.output, args.plot or cfg.plot)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nestisac", description="Nested-array ISAC beam-pattern and Monte Carlo tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bm = sub.add_parser("beam-metrics", help="beam-pattern metrics of nested(N1, N2)")
    bm.add_argument("--n1", type=int, required=True)
    bm.add_argument("--n2", type=int, required=True)
    fmt = bm.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON record (default)")
    fmt.add_argument("--csv", action="store_true", help="one-row CSV without the lobe table")
    bm.set_defaults(func=cmd_beam_metrics)

    bp = sub.add_parser("beam-pattern", help="dump G(delta) over [-2, 2]")
    bp.add_argument("--n1", type=int, required=True)
    bp.add_argument("--n2", type=int, required=True)
    bp.add_argument("--samples", type=_positive("--samples"), default=4001)
    bp.add_argument("--out")
    bp.set_defaults(func=cmd_beam_pattern)

    sr = sub.add_parser("simulate-rate", help="one geometry against the same-size ULA")
    sr.add_argument("--geometry", default="nested:8,8")
    sr.add_argument("--theta-max", type=float, default=10.0, help="UE half-sector in degrees")
    sr.add_argument("--k", type=int, default=7)
    sr.add_argument("--k-c", type=int, default=6)
    sr.add_argument("--snr-db", type=float, default=20.0)
    sr.add_argument("--channel", choices=("los", "one_ring"), default="one_ring")
    sr.add_argument("--trials", type=int, default=100)
    sr.add_argument("--sensing-trials", type=int, default=0)
    sr.add_argument("--snapshots", type=int, default=1000)
    sr.add_argument("--seed", type=int, default=0)
    sr.add_argument("--out")
    sr.add_argument("--plot")
    sr.set_defaults(func=cmd_simulate_rate)

    sd = sub.add_parser("simulate-doa", help="co-array MUSIC on LoS sources")
    sd.add_argument("--geometry", required=True)
    sd.add_argument("--sources", required=True, help="comma-separated angles in degrees")
    sd.add_argument("--snr-db", type=float, default=20.0)
    sd.add_argument("--snapshots", type=_positive("--snapshots"), default=1000)
    sd.add_argument("--trials", type=_positive("--trials"), default=1)
    sd.add_argument("--seed", type=int, default=0)
    sd.add_argument("--grid-size", type=int, default=4096)
    sd.add_argument("--out")
    sd.set_defaults(func=cmd_simulate_doa)

    sw = sub.add_parser("sweep", help="run an experiment from a config file")
    sw.add_argument("--config", required=True)
    sw.add_argument("--trials", type=int, help="override the config's trial count")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--out")
    sw.add_argument("--plot")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
