"""Synthetic fault-detection protocols on the simulators.

Each protocol fits DMDc on a clean simulation, corrupts the monitored channel
with one or more fault modes, trains a tree on a random sample of the
resulting feature rows and scores it on rows from independently seeded
fault runs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .faults import FAULT_MODES, FaultMode, FaultSpec, inject_fault
from .observer import ObserverConfig
from .pipeline import (
    VK,
    DetectorConfig,
    DetectorModel,
    MetricsReport,
    evaluate,
    feature_table,
    fit_lti,
    train_classifier,
)
from .simulators import FlightSimConfig, GkConfig, flight_simulate, gk_simulate
from .timeseries import DelayConfig, RecordedSeries

# The embedding has to span one pitch period (2 pi / 0.05 s ~ 126 s = 628 samples)
# for the linear model to reproduce the limit cycle open-loop.
GK_DELAY = DelayConfig(d=16, n_delays=40)
GK_ENERGY = 1.0 - 1e-7
GK_ONSET = 1000.0

FLIGHT_DELAY = DelayConfig(d=1, n_delays=10)
FLIGHT_ENERGY = 1.0 - 1e-7
FLIGHT_ONSET = 300.0
# fault magnitudes for TAS (m/s): the unit-order GK defaults times this factor
FLIGHT_FAULT_SCALE = 30.0


def gk_config(**overrides) -> DetectorConfig:
    base = DetectorConfig(monitored="C_L", inputs=("alpha", "alpha_dot"), delay=GK_DELAY,
                          energy=GK_ENERGY, depth_grid=tuple(range(1, 8)), n_train=30_000)
    return replace(base, **overrides)


def flight_config(**overrides) -> DetectorConfig:
    base = DetectorConfig(monitored="TAS",
                          inputs=("AoA", "inertial_speed", "pitch", "lift", "thrust"),
                          delay=FLIGHT_DELAY, energy=FLIGHT_ENERGY,
                          depth_grid=tuple(range(1, 8)), n_train=None)
    return replace(base, **overrides)


@dataclass
class ProtocolResult:
    train_modes: tuple[FaultMode, ...]
    model: DetectorModel
    metrics: MetricsReport
    mode_accuracy: dict[FaultMode, float]
    n_train: int
    n_test: int
    seconds: float

    @property
    def cv_accuracy(self) -> float:
        return self.model.cv_accuracy

    @property
    def depth(self) -> int:
        return self.model.tree.max_depth

    @property
    def importances(self) -> dict[str, float]:
        return dict(zip(self.model.feature_schema, self.model.tree.importances))

    @property
    def top_feature(self) -> str:
        imp = self.model.tree.importances
        return self.model.feature_schema[int(np.argmax(imp))]

    def summary(self) -> str:
        m = self.metrics
        seen = "all" if len(self.train_modes) > 1 else self.train_modes[0].value
        fmt = lambda v: "n/a" if v is None else f"{v:.4f}"
        return (f"{seen:>12}: acc {m.accuracy:.4f} prec {fmt(m.precision)} "
                f"rec {fmt(m.recall)} cv {self.cv_accuracy:.4f} depth {self.depth} "
                f"top {self.top_feature} ({self.seconds:.1f}s)")


def fault_runs(clean: RecordedSeries, channel: str, modes: Sequence[FaultMode],
               onset: float, seeds: Sequence[int], scale: float = 1.0):
    """One corrupted copy of ``clean`` per (mode, seed); yields (mode, series, labels)."""
    for mode in modes:
        for s in seeds:
            spec = FaultSpec(FaultMode(mode), onset).scaled(scale)
            series, labels = inject_fault(clean, channel, spec, seed=s)
            yield FaultMode(mode), series, labels


def _pooled(lti, config, runs):
    runs = list(runs)
    schema = config.feature_schema
    blocks = [feature_table(lti, config.observer, [(s, l)], schema) for _, s, l in runs]
    X = np.vstack([b[0] for b in blocks])
    y = np.concatenate([b[1] for b in blocks])
    modes = np.concatenate([[m.value] * b[1].size for (m, _, _), b in zip(runs, blocks)])
    return X, y, modes


def _subsample(rng, n_total, n):
    if n is None or n >= n_total:
        return np.arange(n_total)
    return np.sort(rng.choice(n_total, n, replace=False))


def run_protocol(clean: RecordedSeries, config: DetectorConfig,
                 train_modes: Sequence[FaultMode], test_modes: Sequence[FaultMode] = FAULT_MODES,
                 *, onset: float, n_train: int | None, n_test: int | None,
                 train_fraction: float | None = None, fault_scale: float = 1.0,
                 seed: int = 0, lti=None) -> ProtocolResult:
    """Train on faults of ``train_modes``, test on fresh runs of ``test_modes``.

    Training draws ``n_train`` rows (or ``train_fraction`` of the pool) from as
    many seeded runs as needed; testing draws ``n_test`` rows from one run per
    test mode under different seeds.
    """
    t_start = time.perf_counter()
    train_modes = tuple(FaultMode(m) for m in train_modes)
    if lti is None:
        lti = fit_lti(clean, config)
    rows_per_run = len(clean) - config.delay.warmup - config.observer.window + 1
    n_runs = 1
    if n_train is not None:
        n_runs = max(1, math.ceil(n_train / (rows_per_run * len(train_modes))))
    rng = np.random.default_rng(seed)
    train_seeds = [seed * 1000 + i for i in range(n_runs)]
    test_seeds = [seed * 1000 + 500]
    X, y, _ = _pooled(lti, config, fault_runs(clean, config.monitored, train_modes, onset,
                                              train_seeds, fault_scale))
    if train_fraction is not None:
        n_train = int(round(train_fraction * y.size))
    pick = _subsample(rng, y.size, n_train)
    X, y = X[pick], y[pick]
    tree, cv_acc = train_classifier(X, y, config, config.feature_schema)
    model = DetectorModel(lti, config.observer, tree, config.feature_schema, config.debounce,
                          cv_acc)

    Xt, yt, mt = _pooled(lti, config, fault_runs(clean, config.monitored, test_modes, onset,
                                                 test_seeds, fault_scale))
    pick = _subsample(rng, yt.size, n_test)
    Xt, yt, mt = Xt[pick], yt[pick], mt[pick]
    pred = tree.predict(Xt)
    metrics = evaluate(pred, yt, clean.sample_rate_hz)
    per_mode = {FaultMode(m): float(np.mean(pred[mt == m] == yt[mt == m]))
                for m in dict.fromkeys(mt)}
    return ProtocolResult(train_modes, model, metrics, per_mode, int(y.size), int(yt.size),
                          time.perf_counter() - t_start)


def gk_experiment(train_modes=FAULT_MODES, config: DetectorConfig | None = None,
                  gk: GkConfig = GkConfig(), seed: int = 0, clean=None, lti=None) -> ProtocolResult:
    """Dynamic-stall protocol: 5 Hz for 2000 s, C_L fails at t = 1000 s, 30k/10k rows."""
    config = config or gk_config(seed=seed)
    clean = clean if clean is not None else gk_simulate(gk)
    return run_protocol(clean, config, train_modes, FAULT_MODES, onset=GK_ONSET,
                        n_train=30_000, n_test=10_000, seed=seed, lti=lti)


def flight_experiment(train_modes=FAULT_MODES, test_modes=FAULT_MODES,
                      config: DetectorConfig | None = None,
                      sim: FlightSimConfig = FlightSimConfig(), seed: int = 0,
                      clean=None, lti=None) -> ProtocolResult:
    """Flight surrogate protocol: 10 Hz for 600 s, TAS fails at t = 300 s."""
    config = config or flight_config(seed=seed)
    clean = clean if clean is not None else flight_simulate(sim)
    return run_protocol(clean, config, train_modes, test_modes, onset=FLIGHT_ONSET,
                        n_train=None, n_test=None, train_fraction=0.75,
                        fault_scale=FLIGHT_FAULT_SCALE, seed=seed, lti=lti)
