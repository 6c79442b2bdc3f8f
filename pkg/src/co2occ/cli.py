"""Command-line pipeline: simulate -> calibrate -> pretrain -> evaluate.

Subcommands share a JSON-config-plus-flag-overrides convention (flags win)
and deterministic outputs: rerunning a command with identical inputs and
seeds writes byte-identical files.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical or
convergence error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import calibration, co2, dataset, evaluation, occupancy
from .errors import (ConvergenceError, DegenerateDataError, DomainError,
                     FormatError, NoDecayError, NumericalError, ParseError,
                     StructureError)
from .models import (NetworkConfig, TrainConfig, load_weights, predict,
                     save_weights, train)

DATA_DIR_ENV = "CO2OCC_DATA_DIR"
SENSOR_EPOCH = datetime(2000, 1, 3)  # a Monday


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _structured(cls, data: dict, what: str):
    """Build a config dataclass from JSON data, turning lists into tuples."""
    if not isinstance(data, dict):
        raise FormatError(f"{what} must be a JSON object")
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**coerced)
    except TypeError as exc:
        raise StructureError(f"{what}: {exc}") from exc


def _load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return doc


def _write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _default_dir(value, parser: _Parser, flag: str) -> Path:
    if value is None:
        value = os.environ.get(DATA_DIR_ENV)
    if value is None:
        parser.error(f"{flag} is required (or set ${DATA_DIR_ENV})")
    return Path(value)


def cmd_simulate(args, parser: _Parser) -> int:
    if args.days < 1:
        parser.error("--days must be >= 1")
    out_dir = _default_dir(args.out, parser, "--out")

    room = co2.DEFAULT_ROOM
    bounds = occupancy.DEFAULT_BOUNDS
    if args.config:
        doc = _load_json(args.config)
        if "room" in doc:
            room = _structured(co2.RoomConfig, doc["room"], "room config")
        if "bounds" in doc:
            bounds = _structured(occupancy.SimBounds, doc["bounds"], "bounds config")
    if args.perturb:
        room = co2.perturbed_room(room)
        bounds = occupancy.perturbed_bounds(bounds)

    traces = occupancy.simulate_days(args.days, bounds, seed=args.seed)
    series = co2.simulate_co2(traces, room)

    out_dir.mkdir(parents=True, exist_ok=True)
    occupancy.write_traces(out_dir / "traces.csv", traces)
    co2.write_series_csv(out_dir / "series.csv", series, traces,
                         granularity=args.granularity)
    if args.sensor_format:
        sensor_dir = out_dir / "sensor"
        sensor_dir.mkdir(exist_ok=True)
        step = 5  # sensor cadence, seconds; must stay sub-minute for ingestion
        for d, trace in enumerate(traces):
            lo = d * co2.SECONDS_PER_DAY
            day_series = co2.Co2Series(
                0.0, float(step), series.values[lo:lo + co2.SECONDS_PER_DAY:step])
            counts = np.repeat(trace.occ, 60 // step)
            dataset.write_sensor_csv(sensor_dir / f"day_{d:03d}.csv", day_series,
                                     counts, SENSOR_EPOCH + timedelta(days=d))

    rate = occupancy.presence_rate(traces)
    print(f"days            {args.days}")
    print(f"presence rate   {100 * rate:.2f}%")
    print(f"CO2 range [ppm] {series.values.min():.1f} - {series.values.max():.1f}")
    return 0


def cmd_calibrate(args, parser: _Parser) -> int:
    series, _, _ = co2.read_series_csv(args.series)
    fit = calibration.fit_decay(series, args.volume)
    doc = {
        "lambda_per_s": fit.lam,
        "c_out_ppm": fit.c_out,
        "c0_ppm": fit.c0,
        "mse_ppm2": fit.mse,
        "iterations": fit.iterations,
        "vdot_inf_m3_s": fit.vdot_inf,
        "volume_m3": args.volume,
    }
    if args.out:
        _write_json(args.out, doc)
    print(f"lambda {fit.lam:.6e} 1/s  c_out {fit.c_out:.1f} ppm  "
          f"vdot_inf {fit.vdot_inf:.6e} m3/s  ({fit.iterations} iterations)")
    return 0


def _windows_by_day(minutes: dataset.LabeledMinuteSeries) -> list[dataset.WindowSet]:
    out = []
    for start, end in minutes.segments():
        day = dataset.LabeledMinuteSeries(minutes.co2[start:end],
                                          minutes.labels[start:end])
        out.append(dataset.make_windows(day))
    return out


def _load_simulated_days(data_dir: Path) -> list[dataset.WindowSet]:
    traces = occupancy.read_traces(data_dir / "traces.csv")
    series, _, _ = co2.read_series_csv(data_dir / "series.csv")
    return _windows_by_day(dataset.trace_minutes(series, traces))


def cmd_pretrain(args, parser: _Parser) -> int:
    data_dir = _default_dir(args.data, parser, "--data")
    net_config = NetworkConfig()
    if args.net:
        net_config = NetworkConfig.from_dict(_load_json(args.net))
    train_config = TrainConfig(seed=args.seed)
    if args.train:
        train_config = _structured(TrainConfig,
                                   _load_json(args.train) | {"seed": args.seed},
                                   "train config")

    days = _load_simulated_days(data_dir)
    if args.holdout < 0 or args.holdout >= len(days):
        parser.error(f"--holdout must lie in [0, {len(days) - 1}]")
    train_days = days[:len(days) - args.holdout]
    train_set = dataset.WindowSet.concat(train_days)

    weights, report = train(train_set, net_config, train_config)
    save_weights(args.out, weights)

    doc = {
        "epochs_to_best": report.epochs_to_best,
        "best_val_loss": report.best_val_loss,
        "stopped_epoch": report.stopped_epoch,
        "history": report.history,
        "train_windows": len(train_set),
    }
    print(f"trained on {len(train_set)} windows from {len(train_days)} days; "
          f"best epoch {report.epochs_to_best} "
          f"(val loss {report.best_val_loss:.4f})")
    if args.holdout:
        test_set = dataset.WindowSet.concat(days[len(days) - args.holdout:])
        preds = predict(weights, test_set.inputs)
        doc["test_accuracy"] = evaluation.accuracy(preds, test_set.labels)
        doc["test_f1"] = evaluation.f1(preds, test_set.labels)
        doc["test_windows"] = len(test_set)
        print(f"held-out {args.holdout} days: accuracy {doc['test_accuracy']:.4f}  "
              f"f1 {doc['test_f1']:.4f}")
    if args.report:
        _write_json(args.report, doc)
    return 0


def _load_sensor_days(real_dir: Path) -> list[dataset.WindowSet]:
    files = sorted(p for p in real_dir.iterdir() if p.suffix == ".csv")
    if not files:
        raise DomainError(f"no .csv sensor files in {real_dir}")
    out = []
    for path in files:
        series, counts = dataset.read_sensor_csv(path)
        out.append(dataset.make_windows(dataset.sensor_minutes(series, counts)))
    return out


def cmd_evaluate(args, parser: _Parser) -> int:
    real_dir = _default_dir(args.real, parser, "--real")
    try:
        ks = tuple(int(k) for k in args.k.split(","))
    except ValueError:
        parser.error(f"--k must be comma-separated integers, got {args.k!r}")
    if args.seeds < 1:
        parser.error("--seeds must be >= 1")

    base = load_weights(args.base) if args.base else None
    if args.net:
        net_config = NetworkConfig.from_dict(_load_json(args.net))
    elif base is not None:
        net_config = base.config
    else:
        net_config = NetworkConfig()
    train_config = TrainConfig()
    if args.train:
        train_config = _structured(TrainConfig, _load_json(args.train),
                                   "train config")

    samples_by_day = _load_sensor_days(real_dir)
    for k in ks:
        if not 1 <= k < len(samples_by_day):
            parser.error(f"--k values must lie in [1, {len(samples_by_day) - 1}]")

    result = evaluation.run_protocol(
        samples_by_day, base=base, ks=ks, n_seeds=args.seeds,
        net_config=net_config, train_config=train_config,
        base_seed=args.base_seed, wraparound=args.wraparound, jobs=args.jobs)

    doc = {
        "n_days": len(samples_by_day),
        "ks": list(ks),
        "n_seeds": args.seeds,
        "base_seed": args.base_seed,
        "base_weights": str(args.base) if args.base else None,
        "network": net_config.to_dict(),
        "train": train_config.to_dict(),
    } | evaluation.result_to_dict(result)
    _write_json(args.out, doc)
    if args.csv:
        evaluation.write_runs_csv(args.csv, result)
    print(evaluation.render_report(result), end="")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="co2occ",
                     description="Simulated CO2/occupancy data and "
                                 "transfer-learned occupancy detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="generate a synthetic dataset",
                       description="Simulate occupant behaviour and indoor CO2 "
                                   "for N days; write traces and the CO2 series.")
    p.add_argument("--days", type=int, required=True, help="number of days")
    p.add_argument("--out", help=f"output directory (default ${DATA_DIR_ENV})")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--granularity", choices=("1s", "1min"), default="1min",
                   help="CO2 series sampling step (default 1min)")
    p.add_argument("--config", help="JSON with optional 'room' and 'bounds' sections")
    p.add_argument("--perturb", action="store_true",
                   help="held-out variant: higher infiltration, weaker window "
                        "airing, shifted behaviour bounds")
    p.add_argument("--sensor-format", action="store_true",
                   help="additionally write per-day sensor logs under sensor/")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit the nighttime decay model",
                       description="Least-squares fit of an exponential decay "
                                   "to a CO2 series; reports lambda, outdoor "
                                   "level and the infiltration flow.")
    p.add_argument("--series", required=True, help="CO2 series CSV")
    p.add_argument("--volume", type=float, required=True, help="room volume m3")
    p.add_argument("--out", help="write the fit as JSON")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("pretrain", help="train the base model on simulated data",
                       description="Train the detector on a simulated dataset "
                                   "and write the weights.")
    p.add_argument("--data", help=f"simulate output directory (default ${DATA_DIR_ENV})")
    p.add_argument("--net", help="network config JSON")
    p.add_argument("--train", help="train config JSON")
    p.add_argument("--out", required=True, help="weights file to write")
    p.add_argument("--report", help="write the training report as JSON")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--holdout", type=int, default=0,
                   help="keep the last N days as a test set")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("evaluate", help="run the cross-validation protocol",
                       description="Fold x seed x mode comparison of transfer, "
                                   "cold-start and logistic training on per-day "
                                   "sensor logs.")
    p.add_argument("--real", help=f"directory of per-day sensor CSVs (default ${DATA_DIR_ENV})")
    p.add_argument("--base", help="pretrained weights for transfer mode")
    p.add_argument("--k", default="1,2,3,4",
                   help="comma-separated training-day counts (default 1,2,3,4)")
    p.add_argument("--seeds", type=int, default=10, help="seeds per fold")
    p.add_argument("--base-seed", type=int, default=0, help="first seed value")
    p.add_argument("--net", help="network config JSON (default: base weights' config)")
    p.add_argument("--train", help="train config JSON")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.add_argument("--csv", help="also write the per-run table as CSV")
    p.add_argument("--wraparound", action="store_true",
                   help="let training blocks wrap past the last day")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, parser)
    except SystemExit as exc:  # argparse usage errors and -h
        return int(exc.code or 0)
    except (NoDecayError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, FormatError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
