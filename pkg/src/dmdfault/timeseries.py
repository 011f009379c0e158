"""Sampled signals, CSV ingestion, delay embedding and snapshot matrices."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InsufficientDataError,
    MissingChannelError,
    NonUniformSamplingError,
    ParameterError,
    ShapeError,
)

# relative jitter tolerated between consecutive timestamps
_JITTER_TOL = 0.01


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RecordedSeries:
    """Uniformly sampled multichannel series.

    ``data`` is channel-major (one row per channel) and read-only.
    """

    names: tuple[str, ...]
    data: np.ndarray
    sample_rate_hz: float
    t0: float = 0.0

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        data = _frozen(np.atleast_2d(self.data))
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate channel names: {names}")
        if data.shape[0] != len(names):
            raise ShapeError(f"{len(names)} names for {data.shape[0]} channels")
        if data.shape[1] < 2:
            raise InsufficientDataError("a series needs at least 2 samples")
        if not self.sample_rate_hz > 0:
            raise ParameterError("sample_rate_hz must be positive")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "t0", float(self.t0))

    @classmethod
    def from_channels(cls, channels: dict[str, Sequence[float]], sample_rate_hz, t0=0.0):
        names = list(channels)
        lengths = {len(channels[n]) for n in names}
        if len(lengths) != 1:
            raise ShapeError(f"channels have unequal lengths {sorted(lengths)}")
        return cls(tuple(names), np.vstack([np.asarray(channels[n], float) for n in names]),
                   sample_rate_hz, t0)

    def __len__(self):
        return self.data.shape[1]

    def __contains__(self, name):
        return name in self.names

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MissingChannelError(name, self.names) from None

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate_hz

    def select(self, names: Iterable[str]) -> "RecordedSeries":
        names = list(names)
        rows = [self.index(n) for n in names]
        return RecordedSeries(tuple(names), self.data[rows], self.sample_rate_hz, self.t0)

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        """Rows of the named channels, shape (len(names), len(self))."""
        rows = [self.index(n) for n in names]
        return self.data[rows] if rows else np.zeros((0, len(self)))

    def replace(self, name: str, values) -> "RecordedSeries":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self),):
            raise ShapeError(f"replacement for {name!r} has shape {values.shape}")
        data = self.data.copy()
        data[self.index(name)] = values
        return RecordedSeries(self.names, data, self.sample_rate_hz, self.t0)


@dataclass(frozen=True)
class DelayConfig:
    """Delay stride ``d`` (samples) and number of delays ``n_delays``."""

    d: int = 1
    n_delays: int = 10

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"delay stride must be a positive integer, got {self.d}")
        if int(self.n_delays) != self.n_delays or self.n_delays < 0:
            raise ParameterError(f"number of delays must be >= 0, got {self.n_delays}")

    @property
    def dim(self) -> int:
        return self.n_delays + 1

    @property
    def warmup(self) -> int:
        """First sample index with a complete embedding vector."""
        return self.n_delays * self.d


@dataclass(frozen=True, eq=False)
class SnapshotMatrices:
    X: np.ndarray
    Xp: np.ndarray
    U: np.ndarray

    @property
    def m(self) -> int:
        return self.X.shape[1]


def load_csv(path, monitored: str, inputs: Sequence[str] = ()) -> RecordedSeries:
    """Read a ``t,<channel>,...`` CSV and return the monitored channel followed by inputs."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InsufficientDataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if not header or header[0] != "t":
        raise ParameterError(f"{path}: first column must be 't', got {header[:1]}")
    wanted = [monitored, *inputs]
    cols = []
    for name in wanted:
        if name not in header[1:]:
            raise MissingChannelError(name, header[1:])
        cols.append(header.index(name))
    if len(rows) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 rows, got {len(rows)}")
    try:
        table = np.array([[float(r[i]) for i in [0, *cols]] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ParameterError(f"{path}: malformed row ({exc})") from None
    t = table[:, 0]
    rate = _infer_rate(t, where=str(path))
    return RecordedSeries(tuple(wanted), table[:, 1:].T, rate, t[0])


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Read every column of a headed numeric CSV; returns (header, rows x cols)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InsufficientDataError(f"{path}: empty file") from None
        try:
            rows = [[float(v) for v in r] for r in reader if r]
        except ValueError as exc:
            raise ParameterError(f"{path}: malformed row ({exc})") from None
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def load_series(path) -> RecordedSeries:
    """Read all channels of a CSV in file order."""
    header, table = read_table(path)
    if not header or header[0] != "t":
        raise ParameterError(f"{path}: first column must be 't'")
    if table.shape[0] < 2:
        raise InsufficientDataError(f"{path}: need at least 2 rows")
    rate = _infer_rate(table[:, 0], where=str(path))
    return RecordedSeries(tuple(header[1:]), table[:, 1:].T, rate, table[0, 0])


def write_csv(series: RecordedSeries, path, extra: dict[str, np.ndarray] | None = None):
    extra = extra or {}
    cols = [series.times, *series.data, *[np.asarray(v) for v in extra.values()]]
    header = ["t", *series.names, *extra]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def write_column(path, times, name: str, values):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", name])
        for t, v in zip(times, values):
            w.writerow([repr(float(t)), int(v) if float(v).is_integer() else repr(float(v))])


def _infer_rate(t: np.ndarray, where: str = "") -> float:
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise NonUniformSamplingError(f"{where}: timestamps must be strictly increasing")
    med = float(np.median(dt))
    worst = float(np.max(np.abs(dt - med)))
    if worst > _JITTER_TOL * med:
        raise NonUniformSamplingError(
            f"{where}: timestamp jitter {worst:.3g}s exceeds 1% of median spacing {med:.3g}s")
    # the end-to-end span averages out rounding in the individual stamps
    return (t.size - 1) / (t[-1] - t[0])


def delay_embed(values, cfg: DelayConfig) -> np.ndarray:
    """Stack delayed copies newest-first.

    Column ``j`` holds ``[x_k, x_{k-d}, ..., x_{k-n_d d}]`` for ``k = n_d d + j``.
    """
    x = np.asarray(values, dtype=float).ravel()
    lag = cfg.warmup
    if x.size <= lag:
        raise InsufficientDataError(
            f"sequence of length {x.size} too short for {cfg.n_delays} delays of stride {cfg.d}")
    L = x.size
    return np.vstack([x[lag - i * cfg.d: L - i * cfg.d] for i in range(cfg.dim)])


def snapshot_matrices(states, inputs=None) -> SnapshotMatrices:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] < 2:
        raise InsufficientDataError("need at least 2 snapshots")
    m = states.shape[1] - 1
    if inputs is None:
        inputs = np.zeros((0, states.shape[1]))
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    if inputs.shape[0] == 0:
        U = np.zeros((0, m))
    elif inputs.shape[1] != states.shape[1]:
        raise ShapeError(f"inputs have {inputs.shape[1]} columns, states have {states.shape[1]}")
    else:
        U = inputs[:, :m].copy()
    return SnapshotMatrices(states[:, :m].copy(), states[:, 1:].copy(), U)


def kfold_split(n: int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    if k < 2:
        raise ParameterError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ParameterError(f"cannot split {n} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = []
    for test in np.array_split(perm, k):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        folds.append((np.flatnonzero(mask), np.sort(test)))
    return folds
