"""Synthetic data: Goman-Khrabrov dynamic stall and a longitudinal flight surrogate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, solve_discrete_lyapunov

from .errors import ConfigurationError, ParameterError
from .timeseries import RecordedSeries


# --------------------------------------------------------------------------
# Goman-Khrabrov
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GkConfig:
    tau1: float = 0.5
    tau2: float = 4.5
    omega: float = 0.05
    alpha_mean: float = 0.25
    alpha_amp: float = 0.25
    dt: float = 0.2
    duration: float = 2000.0

    def __post_init__(self):
        if self.tau2 <= 0:
            raise ParameterError("tau2 must be positive")
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.duration <= self.dt:
            raise ParameterError("duration must exceed dt")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))


def gk_x0(alpha):
    """Steady separation point; 1 is fully attached flow."""
    return (1.0 - np.tanh(20.0 * (np.asarray(alpha) - 0.25))) / 2.0


def gk_lift(alpha, x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ParameterError("separation point must lie in [0, 1]")
    return np.pi / 2 * np.sin(np.asarray(alpha) * (1.0 + np.sqrt(x)) ** 2)


def gk_trajectory(cfg: GkConfig = GkConfig(), x_init: float | None = None):
    """Integrate the separation point with RK4; returns (t, alpha, alpha_dot, x).

    By default x starts at its quasi-steady value for the initial pitch state.
    """
    n = cfg.n_samples
    t = np.arange(n) * cfg.dt
    am, aa, w = cfg.alpha_mean, cfg.alpha_amp, cfg.omega
    tau1, tau2 = cfg.tau1, cfg.tau2

    def rhs(s, x):
        a = am + aa * math.sin(w * s)
        adot = aa * w * math.cos(w * s)
        target = (1.0 - math.tanh(20.0 * (a - tau1 * adot - 0.25))) / 2.0
        return (target - x) / tau2

    h = cfg.dt
    xs = np.empty(n)
    a0 = am
    adot0 = aa * w
    x = float(gk_x0(a0 - tau1 * adot0)) if x_init is None else float(x_init)
    if not 0.0 <= x <= 1.0:
        raise ParameterError("initial separation point must lie in [0, 1]")
    for k in range(n):
        xs[k] = x
        s = t[k]
        k1 = rhs(s, x)
        k2 = rhs(s + h / 2, x + h / 2 * k1)
        k3 = rhs(s + h / 2, x + h / 2 * k2)
        k4 = rhs(s + h, x + h * k3)
        x = min(1.0, max(1e-9, x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)))
    alpha = am + aa * np.sin(w * t)
    alpha_dot = aa * w * np.cos(w * t)
    return t, alpha, alpha_dot, xs


def gk_simulate(cfg: GkConfig = GkConfig()) -> RecordedSeries:
    t, alpha, alpha_dot, x = gk_trajectory(cfg)
    cl = gk_lift(alpha, x)
    return RecordedSeries(("C_L", "alpha", "alpha_dot"), np.vstack([cl, alpha, alpha_dot]),
                          1.0 / cfg.dt, 0.0)


# --------------------------------------------------------------------------
# Turbulence
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TurbulenceFilter:
    """Critically damped second-order low-pass ``wc^2 / (s + wc)^2``.

    The corner is roughly airspeed over turbulence scale length.
    """

    corner_rad_s: float = 0.4

    def __post_init__(self):
        if self.corner_rad_s <= 0:
            raise ParameterError("corner frequency must be positive")

    def discretize(self, dt: float):
        """Zero-order-hold state-space (Ad, Bd, C) of the shaping filter."""
        wc = self.corner_rad_s
        Ac = np.array([[0.0, 1.0], [-wc * wc, -2.0 * wc]])
        Bc = np.array([0.0, wc * wc])
        M = np.zeros((3, 3))
        M[:2, :2] = Ac * dt
        M[:2, 2] = Bc * dt
        E = expm(M)
        return E[:2, :2], E[:2, 2], np.array([1.0, 0.0])


def turbulence_forcing(duration: float, dt: float, intensity: float,
                       filter_params: TurbulenceFilter = TurbulenceFilter(),
                       seed=0) -> np.ndarray:
    """Shaped band-limited white noise with stationary standard deviation ``intensity``."""
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if intensity < 0:
        raise ParameterError("turbulence intensity must be nonnegative")
    n = int(round(duration / dt))
    if intensity == 0:
        return np.zeros(n)
    Ad, Bd, C = filter_params.discretize(dt)
    P = solve_discrete_lyapunov(Ad, np.outer(Bd, Bd))
    scale = intensity / math.sqrt(C @ P @ C)
    rng = np.random.default_rng(seed)
    s = rng.multivariate_normal(np.zeros(2), P, method="cholesky")
    u = rng.standard_normal(n)
    out = np.empty(n)
    for k in range(n):
        out[k] = C @ s
        s = Ad @ s + Bd * u[k]
    return scale * out


# --------------------------------------------------------------------------
# Longitudinal flight surrogate
# --------------------------------------------------------------------------

def _default_dynamics():
    # states: forward speed u, vertical speed w (m/s), pitch rate q (rad/s), pitch theta (rad)
    g, U0 = 9.81, 200.0
    return np.array([
        [-0.01, 0.03, 0.0, -g],
        [-0.10, -1.00, U0, 0.0],
        [0.0, -0.02, -1.20, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ])


@dataclass(frozen=True, eq=False)
class FlightSimConfig:
    """Linear longitudinal surrogate about steady level flight.

    Gusts enter through the aerodynamic (velocity) columns of ``dynamics``:
    forces depend on airspeed, i.e. inertial velocity minus wind.
    """

    dt: float = 0.1
    duration: float = 600.0
    turbulence_intensity: float = 0.3
    filter_params: TurbulenceFilter = TurbulenceFilter()
    trim_speed: float = 200.0
    trim_aoa: float = 0.05
    trim_lift: float = 1.0
    lift_slope: float = 12.5
    trim_thrust: float = 20.0
    dynamics: np.ndarray = field(default_factory=_default_dynamics)
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.duration <= self.dt:
            raise ParameterError("need dt > 0 and duration > dt")
        if self.turbulence_intensity < 0:
            raise ParameterError("turbulence intensity must be nonnegative")
        A = np.asarray(self.dynamics, dtype=float)
        if A.shape != (4, 4):
            raise ConfigurationError(f"dynamics must be 4x4, got {A.shape}")
        object.__setattr__(self, "dynamics", A)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))


FLIGHT_CHANNELS = ("TAS", "AoA", "inertial_speed", "pitch", "lift", "thrust")


def rk4_matrices(A: np.ndarray, F: np.ndarray, h: float):
    """Exact one-step RK4 map for ``x' = A x + F g`` with ``g`` held over the step."""
    n = A.shape[0]
    I = np.eye(n)
    hA = h * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    Phi = I + hA + hA2 / 2 + hA3 / 6 + hA3 @ hA / 24
    Gam = h * (I + hA / 2 + hA2 / 6 + hA3 / 24) @ F
    return Phi, Gam


def flight_simulate(cfg: FlightSimConfig = FlightSimConfig()) -> RecordedSeries:
    A = cfg.dynamics
    F = -A[:, :2]
    Phi, Gam = rk4_matrices(A, F, cfg.dt)
    rho = float(np.max(np.abs(np.linalg.eigvals(Phi))))
    if rho > 1.0:
        raise ConfigurationError(f"discretized dynamics are unstable (spectral radius {rho:.6g})")
    n = cfg.n_samples
    su, sw = np.random.SeedSequence(cfg.seed).spawn(2)
    gusts = np.vstack([
        turbulence_forcing(cfg.duration, cfg.dt, cfg.turbulence_intensity, cfg.filter_params, su),
        turbulence_forcing(cfg.duration, cfg.dt, cfg.turbulence_intensity, cfg.filter_params, sw),
    ])
    X = np.empty((4, n))
    x = np.zeros(4)
    for k in range(n):
        X[:, k] = x
        x = Phi @ x + Gam @ gusts[:, k]
    u, w, _, theta = X
    fwd_air = cfg.trim_speed + u - gusts[0]
    vert_air = w - gusts[1]
    tas = np.hypot(fwd_air, vert_air)
    aoa = cfg.trim_aoa + np.arctan2(vert_air, fwd_air)
    inertial = np.hypot(cfg.trim_speed + u, w)
    pitch = cfg.trim_aoa + theta
    lift = cfg.trim_lift + cfg.lift_slope * (aoa - cfg.trim_aoa)
    thrust = np.full(n, cfg.trim_thrust)
    return RecordedSeries(FLIGHT_CHANNELS, np.vstack([tas, aoa, inertial, pitch, lift, thrust]),
                          1.0 / cfg.dt, 0.0)
