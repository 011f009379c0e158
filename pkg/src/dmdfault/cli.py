"""Command-line entry point: ``dmdfault <command> ...``.

Failures print one JSON object ``{"error": <category>, "message": ...}`` on
stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments
from .errors import DmdFaultError, ParameterError, ShapeError
from .faults import FAULT_MODES, FaultMode, FaultSpec, inject_fault
from .modelio import load_model, save_model
from .observer import ObserverConfig
from .pipeline import DetectorConfig, evaluate, fit_lti, offline_train, online_detect
from .simulators import FlightSimConfig, GkConfig, flight_simulate, gk_simulate
from .timeseries import (
    DelayConfig,
    load_csv,
    load_series,
    read_table,
    write_column,
    write_csv,
)

log = logging.getLogger("dmdfault")


def _depth_grid(text: str) -> tuple[int, ...]:
    try:
        if ".." in text:
            a, b = text.split("..")
            grid = tuple(range(int(a), int(b) + 1))
        else:
            grid = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b or a comma list, got {text!r}") from None
    if not grid or min(grid) < 1:
        raise argparse.ArgumentTypeError(f"depth grid {text!r} must contain depths >= 1")
    return grid


def _names(text: str) -> tuple[str, ...]:
    return tuple(n.strip() for n in text.split(",") if n.strip())


def _read_labels(path) -> np.ndarray:
    """Last column of a two-column ``t,<name>`` CSV."""
    header, table = read_table(path)
    if len(header) < 2:
        raise ShapeError(f"{path}: expected a time column and a value column")
    return table[:, -1]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    if args.system == "gk":
        cfg = GkConfig(dt=args.dt or GkConfig.dt, duration=args.duration or GkConfig.duration)
        series = gk_simulate(cfg)
    else:
        cfg = FlightSimConfig(dt=args.dt or FlightSimConfig.dt,
                              duration=args.duration or FlightSimConfig.duration,
                              turbulence_intensity=(FlightSimConfig.turbulence_intensity
                                                    if args.intensity is None else args.intensity),
                              seed=args.seed)
        series = flight_simulate(cfg)
    write_csv(series, args.out)
    log.info("wrote %d samples of %s to %s", len(series), ", ".join(series.names), args.out)


def cmd_inject(args):
    series = load_series(args.inp)
    spec = FaultSpec(FaultMode(args.mode), args.onset)
    overrides = {k: getattr(args, k) for k in
                 ("amplitude", "frequency_hz", "noise_std", "drift_rate", "gain_std")
                 if getattr(args, k) is not None}
    spec = FaultSpec(**{**spec.to_dict(), **overrides}).scaled(args.scale)
    faulty, labels = inject_fault(series, args.channel, spec, seed=args.seed)
    write_csv(faulty, args.out)
    write_column(args.labels_out, series.times, "label", labels)


def _labeled(arg: str, monitored, inputs):
    data, sep, labels = arg.partition("+")
    if not sep:
        raise ParameterError(f"--labeled expects data.csv+labels.csv, got {arg!r}")
    return load_csv(data, monitored, inputs), _read_labels(labels).astype(np.int8)


def cmd_train(args):
    inputs = _names(args.inputs)
    config = DetectorConfig(
        monitored=args.monitored, inputs=inputs,
        delay=DelayConfig(args.stride, args.delays),
        rank=args.rank, energy=None if args.rank else args.energy,
        observer=ObserverConfig(args.gain, args.window),
        depth_grid=args.depth_grid, folds=args.folds,
        n_train=args.n_train or None, seed=args.seed, debounce=args.debounce)
    clean = load_csv(args.clean, args.monitored, inputs)
    sets = [_labeled(a, args.monitored, inputs) for a in args.labeled]
    model = offline_train(clean, sets, config)
    save_model(model, args.out)
    log.info("tree depth %d, cross-validated accuracy %.4f", model.tree.max_depth,
             model.cv_accuracy)


def cmd_detect(args):
    model = load_model(args.model)
    series = load_series(args.inp)
    flags = online_detect(model, series)
    write_column(args.out, series.times, "flag", flags)


def cmd_evaluate(args):
    flags = _read_labels(args.flags)
    labels = _read_labels(args.labels)
    report = evaluate(flags, labels, args.rate)
    if args.report == "json":
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        for k, v in report.to_dict().items():
            print(f"{k:>16}: {'n/a' if v is None else v}")


def cmd_experiment(args):
    others = tuple(m for m in FAULT_MODES if m is not FaultMode.CATASTROPHIC)
    if args.system == "gk":
        clean = gk_simulate()
        cfg = experiments.gk_config(seed=args.seed)
        lti = fit_lti(clean, cfg)
        for modes in [FAULT_MODES] + [(m,) for m in FAULT_MODES]:
            r = experiments.gk_experiment(modes, cfg, seed=args.seed, clean=clean, lti=lti)
            print(r.summary(), flush=True)
    else:
        clean = flight_simulate(FlightSimConfig(seed=args.seed))
        cfg = experiments.flight_config(seed=args.seed)
        lti = fit_lti(clean, cfg)
        for train, test in [(FAULT_MODES, FAULT_MODES), ((FaultMode.CATASTROPHIC,), others)]:
            r = experiments.flight_experiment(train, test, cfg, seed=args.seed, clean=clean,
                                              lti=lti)
            print(r.summary(), flush=True)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmdfault", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a synthetic series to CSV")
    s.add_argument("system", choices=("gk", "flight"))
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dt", type=float)
    s.add_argument("--duration", type=float)
    s.add_argument("--intensity", type=float, help="turbulence std (flight only)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("inject", help="corrupt one channel and write labels")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--channel", required=True)
    s.add_argument("--mode", required=True, choices=[m.value for m in FAULT_MODES])
    s.add_argument("--onset", type=float, required=True, help="fault start time (s)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--labels-out", required=True)
    s.add_argument("--scale", type=float, default=1.0, help="multiply every fault magnitude")
    s.add_argument("--amplitude", type=float)
    s.add_argument("--frequency", dest="frequency_hz", type=float)
    s.add_argument("--noise-std", type=float)
    s.add_argument("--drift-rate", type=float)
    s.add_argument("--gain-std", type=float)
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("train", help="fit DMDc on clean data and a tree on labeled runs")
    s.add_argument("--clean", required=True)
    s.add_argument("--labeled", nargs="+", required=True, metavar="DATA+LABELS")
    s.add_argument("--monitored", required=True)
    s.add_argument("--inputs", default="", help="comma-separated input channels")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gain", type=float, default=ObserverConfig.gain)
    s.add_argument("--window", type=int, default=ObserverConfig.window)
    s.add_argument("--delays", type=int, default=DelayConfig.n_delays)
    s.add_argument("--stride", type=int, default=DelayConfig.d)
    s.add_argument("--rank", type=int, help="fixed SVD rank (overrides --energy)")
    s.add_argument("--energy", type=float, default=DetectorConfig.energy)
    s.add_argument("--depth-grid", type=_depth_grid, default=DetectorConfig.depth_grid)
    s.add_argument("--folds", type=int, default=DetectorConfig.folds)
    s.add_argument("--n-train", type=int, default=DetectorConfig.n_train,
                   help="rows sampled for training; 0 uses all")
    s.add_argument("--debounce", type=int, default=0)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("detect", help="flag every sample of a series")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("evaluate", help="score flags against labels")
    s.add_argument("--flags", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--rate", type=float, required=True, help="sample rate (Hz)")
    s.add_argument("--report", choices=("json", "text"), default="text")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("experiment", help="run a full synthetic protocol and print summaries")
    s.add_argument("system", choices=("gk", "flight"))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_experiment)
    return p


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except DmdFaultError as exc:
        return _fail(exc.category, str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
