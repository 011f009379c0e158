"""Sensor fault injection with ground-truth labels."""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .timeseries import RecordedSeries

POST_NOISE_STD = 5e-3


class FaultMode(str, enum.Enum):
    CATASTROPHIC = "catastrophic"
    OSCILLATION = "oscillation"
    NOISE = "noise"
    DRIFT = "drift"
    NONE = "none"


FAULT_MODES = (FaultMode.CATASTROPHIC, FaultMode.OSCILLATION, FaultMode.NOISE, FaultMode.DRIFT)


@dataclass(frozen=True)
class FaultSpec:
    """One fault applied from ``onset_s`` on.

    catastrophic: ``x * g`` with ``g ~ N(0, gain_std^2)``
    oscillation:  ``x + amplitude * sin(2 pi frequency_hz (t - onset))``
    noise:        ``x + N(0, noise_std^2)``
    drift:        ``x + drift_rate * (t - onset)``
    """

    mode: FaultMode = FaultMode.NONE
    onset_s: float = 0.0
    amplitude: float = 0.1
    frequency_hz: float = 0.01
    noise_std: float = 0.1
    drift_rate: float = 0.001
    gain_std: float = 1.0
    post_noise_std: float = POST_NOISE_STD

    def __post_init__(self):
        object.__setattr__(self, "mode", FaultMode(self.mode))
        for name in ("noise_std", "gain_std", "post_noise_std"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def scaled(self, factor: float) -> "FaultSpec":
        """Same fault with every magnitude multiplied by ``factor`` (gain_std is unitless)."""
        return FaultSpec(self.mode, self.onset_s, self.amplitude * factor, self.frequency_hz,
                         self.noise_std * factor, self.drift_rate * factor, self.gain_std,
                         self.post_noise_std * factor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FaultSpec":
        return cls(**d)


def inject_fault(series: RecordedSeries, channel: str, spec: FaultSpec,
                 seed: int = 0) -> tuple[RecordedSeries, np.ndarray]:
    """Corrupt ``channel`` per ``spec`` and add white noise to every sample of it.

    Returns the new series and 0/1 labels (1 from the first sample at/after onset).
    """
    x = series[channel]
    if spec.onset_s < series.t0:
        raise ParameterError(f"onset {spec.onset_s} precedes series start {series.t0}")
    t = series.times
    # sample k is at/after onset; the slack absorbs k/rate rounding
    after = t >= spec.onset_s - 1e-9 * max(1.0, abs(spec.onset_s))
    if spec.mode is FaultMode.NONE:
        after[:] = False
    fault_rng, noise_rng = np.random.default_rng(seed).spawn(2)
    y = x.copy()
    n_after = int(after.sum())
    elapsed = t[after] - spec.onset_s
    if spec.mode is FaultMode.CATASTROPHIC:
        y[after] = x[after] * fault_rng.normal(0.0, spec.gain_std, n_after)
    elif spec.mode is FaultMode.OSCILLATION:
        y[after] += spec.amplitude * np.sin(2 * np.pi * spec.frequency_hz * elapsed)
    elif spec.mode is FaultMode.NOISE:
        y[after] += fault_rng.normal(0.0, spec.noise_std, n_after)
    elif spec.mode is FaultMode.DRIFT:
        y[after] += spec.drift_rate * elapsed
    y += noise_rng.normal(0.0, spec.post_noise_std, y.size)
    return series.replace(channel, y), after.astype(np.int8)
