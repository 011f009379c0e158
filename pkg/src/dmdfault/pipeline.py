"""Offline training, online detection and evaluation metrics."""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifier import TrainedTree, class_reweight, cross_validate, tree_fit, tree_predict
from .errors import (
    ConfigurationError,
    MissingChannelError,
    NumericError,
    ShapeError,
    SingleClassError,
)
from .observer import ObserverConfig, StreamingObserver, run_observer
from .sysid import DEFAULT_ENERGY, LtiModel, dmdc_fit, eigenvalues
from .timeseries import DelayConfig, RecordedSeries, delay_embed, snapshot_matrices

log = logging.getLogger(__name__)

VK = "V_k"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class DetectorConfig:
    monitored: str
    inputs: tuple[str, ...] = ()
    delay: DelayConfig = DelayConfig()
    rank: int | None = None
    energy: float | None = DEFAULT_ENERGY
    observer: ObserverConfig = ObserverConfig()
    depth_grid: tuple[int, ...] = tuple(range(1, 8))
    folds: int = 5
    n_train: int | None = 30_000
    seed: int = 0
    debounce: int = 0
    # open-loop growth tolerated in A - K I; periodic data puts modes on the unit circle
    max_spectral_radius: float = 1.0 + 1e-4

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "depth_grid", tuple(int(d) for d in self.depth_grid))
        if self.debounce < 0:
            raise ConfigurationError("debounce must be >= 0")

    @property
    def feature_schema(self) -> tuple[str, ...]:
        return (self.monitored, *self.inputs, VK)


@dataclass(eq=False)
class DetectorModel:
    lti: LtiModel
    observer_cfg: ObserverConfig
    tree: TrainedTree
    feature_schema: tuple[str, ...]
    debounce: int = 0
    cv_accuracy: float = float("nan")
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.feature_schema = tuple(self.feature_schema)
        if len(self.feature_schema) != self.tree.n_features:
            raise ShapeError(
                f"schema has {len(self.feature_schema)} features, tree expects {self.tree.n_features}")
        if self.feature_schema.count(VK) != 1:
            raise ShapeError(f"{VK!r} must appear exactly once in the feature schema")

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(f for f in self.feature_schema if f != VK)

    @property
    def warmup(self) -> int:
        """Samples before the first possible flag."""
        return self.lti.delay_cfg.warmup + self.observer_cfg.window - 1


@dataclass(frozen=True)
class MetricsReport:
    total: int
    true_positives: int
    false_positives: int
    false_negatives: int
    accuracy: float
    precision: float | None
    recall: float | None
    # None when there is no fault; inf when a fault is never flagged
    lag_time_s: float | None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["lag_time_s"] is not None and math.isinf(d["lag_time_s"]):
            d["lag_time_s"] = "inf"
        return d


# ---------------------------------------------------------------------------
# offline phase
# ---------------------------------------------------------------------------

def fit_lti(clean: RecordedSeries, config: DetectorConfig) -> LtiModel:
    """Delay-embed the monitored channel of clean data and fit DMDc."""
    X = delay_embed(clean[config.monitored], config.delay)
    Y = clean.matrix(config.inputs)[:, config.delay.warmup:]
    snaps = snapshot_matrices(X, Y)
    model = dmdc_fit(snaps, rank=config.rank, energy=config.energy, delay_cfg=config.delay,
                     state_channel=config.monitored, input_channels=config.inputs)
    K = config.observer.gain
    rho = float(np.max(np.abs(eigenvalues(model.A - K * np.eye(model.n)))))
    if rho > config.max_spectral_radius:
        raise ConfigurationError(
            f"observer is unstable: spectral radius of A - K I is {rho:.6g} "
            f"(limit {config.max_spectral_radius}); try a larger gain or longer embedding")
    return model


def feature_rows(lti: LtiModel, obs: ObserverConfig, series: RecordedSeries,
                 schema: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix ``[raw channels..., V_k]`` for samples with a full window.

    Returns (rows, sample indices).
    """
    trace = run_observer(lti, obs, series)
    idx = trace.start + np.flatnonzero(trace.valid)
    cols = []
    for name in schema:
        cols.append(trace.vk[trace.valid] if name == VK else series[name][idx])
    return np.column_stack(cols), idx


def feature_table(lti: LtiModel, obs: ObserverConfig,
                  labeled_sets: Iterable[tuple[RecordedSeries, np.ndarray]],
                  schema: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    Xs, ys = [], []
    for series, labels in labeled_sets:
        labels = np.asarray(labels).reshape(-1)
        if labels.size != len(series):
            raise ShapeError(f"{labels.size} labels for a series of length {len(series)}")
        rows, idx = feature_rows(lti, obs, series, schema)
        Xs.append(rows)
        ys.append(labels[idx])
    if not Xs:
        raise SingleClassError("no labeled data")
    return np.vstack(Xs), np.concatenate(ys).astype(np.int8)


def train_classifier(X, y, config: DetectorConfig,
                     feature_names: Sequence[str]) -> tuple[TrainedTree, float]:
    """Reweight classes, pick depth by k-fold CV, refit on everything."""
    w = class_reweight(y)
    depth, acc = cross_validate(X, y, w, config.depth_grid, config.folds, config.seed)
    log.info("cross-validated depth %d (holdout accuracy %.4f)", depth, acc)
    return tree_fit(X, y, w, max_depth=depth, feature_names=feature_names), acc


def offline_train(clean: RecordedSeries,
                  labeled_sets: Sequence[tuple[RecordedSeries, np.ndarray]],
                  config: DetectorConfig) -> DetectorModel:
    lti = fit_lti(clean, config)
    schema = config.feature_schema
    X, y = feature_table(lti, config.observer, labeled_sets, schema)
    if config.n_train is not None and y.size > config.n_train:
        pick = np.sort(np.random.default_rng(config.seed).choice(y.size, config.n_train,
                                                                  replace=False))
        X, y = X[pick], y[pick]
    tree, acc = train_classifier(X, y, config, schema)
    return DetectorModel(lti, config.observer, tree, schema, config.debounce, acc)


# ---------------------------------------------------------------------------
# online phase
# ---------------------------------------------------------------------------

class Detector:
    """Streaming detector: one call to :meth:`update` per incoming sample."""

    def __init__(self, model: DetectorModel):
        self.model = model
        self._obs = StreamingObserver(model.lti, model.observer_cfg)
        self._schema = model.feature_schema
        self._vk_col = self._schema.index(VK)
        self._recent = deque(maxlen=model.debounce + 1)
        self.position = 0

    def update(self, sample: Mapping[str, float]) -> int:
        """Consume a {channel: value} sample and return the fault flag for it."""
        try:
            raw = [float(sample[c]) for c in self.model.channels]
        except KeyError as exc:
            raise MissingChannelError(exc.args[0], tuple(sample)) from None
        if not all(math.isfinite(v) for v in raw):
            raise NumericError(f"non-finite sample at stream position {self.position}")
        lti = self.model.lti
        y = [float(sample[c]) for c in lti.input_channels]
        vk = self._obs.update(float(sample[lti.state_channel]), y)
        self.position += 1
        if vk is None or not self._obs.ready:
            self._recent.append(0)
            return 0
        row = raw[:]
        row.insert(self._vk_col, vk)
        self._recent.append(tree_predict(self.model.tree, row))
        if len(self._recent) < self._recent.maxlen:
            return 0
        return int(all(self._recent))


def _debounce(raw: np.ndarray, m: int) -> np.ndarray:
    if m == 0:
        return raw
    run = np.zeros(raw.size, dtype=np.int64)
    count = 0
    for i, v in enumerate(raw):
        count = count + 1 if v else 0
        run[i] = count
    return (run > m).astype(np.int8)


def online_detect(model: DetectorModel, data) -> np.ndarray:
    """Flags for every sample of a series, or for an iterable of sample mappings."""
    if not isinstance(data, RecordedSeries):
        det = Detector(model)
        return np.array([det.update(s) for s in data], dtype=np.int8)
    series = data
    for c in model.channels:
        series.index(c)
    bad = ~np.isfinite(series.matrix(model.channels))
    if bad.any():
        pos = int(np.flatnonzero(bad.any(axis=0))[0])
        raise NumericError(f"non-finite sample at stream position {pos}")
    rows, idx = feature_rows(model.lti, model.observer_cfg, series, model.feature_schema)
    flags = np.zeros(len(series), dtype=np.int8)
    flags[idx] = model.tree.predict(rows)
    return _debounce(flags, model.debounce)


def evaluate(flags, labels, sample_rate_hz: float) -> MetricsReport:
    f = np.asarray(flags).reshape(-1).astype(bool)
    y = np.asarray(labels).reshape(-1).astype(bool)
    if f.size != y.size:
        raise ShapeError(f"{f.size} flags vs {y.size} labels")
    tp = int(np.sum(f & y))
    fp = int(np.sum(f & ~y))
    fn = int(np.sum(~f & y))
    total = int(f.size)
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if y.any():
        onset = int(np.argmax(y))
        hits = np.flatnonzero(f[onset:])
        lag = float(hits[0]) / sample_rate_hz if hits.size else math.inf
    else:
        lag = None
    return MetricsReport(total, tp, fp, fn, 1.0 - (fp + fn) / total if total else float("nan"),
                         precision, recall, lag)
