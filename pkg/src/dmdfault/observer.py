"""Kalman observer tracking a moving average of the squared innovation."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .sysid import LtiModel
from .timeseries import RecordedSeries, delay_embed

DEFAULT_GAIN = 0.01
DEFAULT_WINDOW = 100


@dataclass(frozen=True)
class ObserverConfig:
    gain: float = DEFAULT_GAIN
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if not 0.0 <= self.gain < 1.0:
            raise ParameterError(f"observer gain must lie in [0, 1), got {self.gain}")
        if int(self.window) != self.window or self.window < 1:
            raise ParameterError(f"window must be a positive integer, got {self.window}")


@dataclass(frozen=True, eq=False)
class ObserverState:
    xhat: np.ndarray
    window_buf: tuple[float, ...] = ()
    vk: float = 0.0

    def is_full(self, cfg: ObserverConfig) -> bool:
        return len(self.window_buf) >= cfg.window


def innovation_covariance(buffer, window: int) -> float:
    """Mean squared innovation over the last ``min(window, len(buffer))`` entries."""
    recent = list(buffer)[-window:]
    if not recent:
        raise ParameterError("innovation buffer is empty")
    sq = [e * e for e in recent]
    n = len(sq)
    mean = math.fsum(sq) / n
    # one refinement pass removes the rounding of the division
    return mean + math.fsum(s - mean for s in sq) / n


def init_state(model: LtiModel, x0) -> ObserverState:
    """Start the estimate at the first embedded measurement."""
    x0 = np.array(x0, dtype=float).reshape(-1)
    if x0.size != model.n:
        raise ShapeError(f"initial state has length {x0.size}, model dimension is {model.n}")
    return ObserverState(xhat=x0)


def observer_step(state: ObserverState, model: LtiModel, cfg: ObserverConfig,
                  x_k, y_k=()) -> tuple[ObserverState, float]:
    """Advance the estimate one sample; returns the new state and current innovation."""
    x_k = np.asarray(x_k, dtype=float).reshape(-1)
    y_k = np.asarray(y_k, dtype=float).reshape(-1)
    if x_k.size != model.n or y_k.size != model.p:
        raise ShapeError(
            f"expected state of length {model.n} and inputs of length {model.p}, "
            f"got {x_k.size} and {y_k.size}")
    if not (np.all(np.isfinite(x_k)) and np.all(np.isfinite(y_k))):
        raise NumericError("non-finite measurement")
    e = x_k - state.xhat
    innov = float(e[0])
    xhat = model.A @ state.xhat + model.B @ y_k + cfg.gain * e
    buf = (*state.window_buf[-(cfg.window - 1):], innov) if cfg.window > 1 else (innov,)
    vk = innovation_covariance(buf, cfg.window)
    return ObserverState(xhat, buf, vk), innov


@dataclass(frozen=True, eq=False)
class ObserverTrace:
    """Observer output aligned with series samples ``start, start+1, ...``."""

    start: int
    innovations: np.ndarray
    vk: np.ndarray
    valid: np.ndarray

    def full_length(self, n: int, fill=np.nan) -> np.ndarray:
        out = np.full(n, fill, dtype=float)
        out[self.start:] = self.vk
        return out


def run_observer(model: LtiModel, cfg: ObserverConfig, series: RecordedSeries) -> ObserverTrace:
    """Run the observer over a whole series.

    The first ``n_d * d`` samples lack a full embedding vector and produce no
    output; ``valid`` marks entries whose innovation window is full.
    """
    x = delay_embed(series[model.state_channel], model.delay_cfg)
    start = model.delay_cfg.warmup
    Y = series.matrix(model.input_channels)[:, start:]
    if x.shape[0] != model.n:
        raise ShapeError(f"embedding dimension {x.shape[0]} != model dimension {model.n}")
    steps = x.shape[1]
    innov = np.empty(steps)
    vk = np.empty(steps)
    state = init_state(model, x[:, 0])
    for j in range(steps):
        state, innov[j] = observer_step(state, model, cfg, x[:, j], Y[:, j])
        vk[j] = state.vk
    valid = np.arange(steps) >= cfg.window - 1
    return ObserverTrace(start, innov, vk, valid)


class StreamingObserver:
    """Single-stream wrapper that embeds raw samples as they arrive."""

    def __init__(self, model: LtiModel, cfg: ObserverConfig):
        self.model = model
        self.cfg = cfg
        self._history = deque(maxlen=model.delay_cfg.warmup + 1)
        self.state: ObserverState | None = None

    @property
    def ready(self) -> bool:
        return self.state is not None and self.state.is_full(self.cfg)

    def update(self, x: float, y=()) -> float | None:
        """Consume one raw sample; returns V_k once an embedding is available."""
        self._history.append(float(x))
        if len(self._history) < self._history.maxlen:
            return None
        d = self.model.delay_cfg.d
        newest_first = list(self._history)[::-1][::d]
        if self.state is None:
            self.state = init_state(self.model, newest_first)
        self.state, _ = observer_step(self.state, self.model, self.cfg, newest_first, y)
        return self.state.vk
