"""Side-of-fringe lock simulation and detuned-lock optical cooling arithmetic.

simulate_lock runs a discrete-time PID loop against the nonlinear
transmission fringe: thermal motion of the outer resonator shifts the
cavity detuning, the detector sees the fringe level, and the controller
moves an ideal zero-order-hold actuator that subtracts from the detuning.
The cooling operations are algebraic (linearised optomechanics), not
dynamical.
"""

import math
from dataclasses import dataclass

import numpy as np

from .cavity import Cavity, fringe_response
from .mech import MechMode, NestedModel
from .synth import TimeSeries, synth_brownian


@dataclass(frozen=True)
class LockConfig:
    """PID gains in actuator meters per fringe-signal unit (and per s / s)."""

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    setpoint: float | None = None     # None: fringe level at detuning_bias
    actuator_range: float = 1e-9
    loop_rate: float = 5e6
    detuning_bias: float = 0.0

    def __post_init__(self):
        if not self.loop_rate > 0:
            raise ValueError("loop_rate must be > 0")
        if not self.actuator_range > 0:
            raise ValueError("actuator_range must be > 0")


@dataclass(frozen=True)
class CoolingConfig:
    """Linearised optomechanical cooling parameters (all angular rates)."""

    g0: float          # per-photon coupling rate, rad/s
    n_cav: float       # mean intracavity photon number
    detuning: float    # laser-cavity detuning, rad/s (negative = red)
    kappa: float       # cavity energy decay rate, rad/s

    def __post_init__(self):
        if self.n_cav < 0:
            raise ValueError("n_cav must be >= 0")
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        for name in ("g0", "n_cav", "detuning", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass
class LockResult:
    error_signal: TimeSeries
    actuator: TimeSeries
    detuning: TimeSeries
    lock_acquired: bool
    saturation_fraction: float
    open_loop_error_rms: float
    closed_loop_error_rms: float
    open_loop_detuning_rms: float
    closed_loop_detuning_rms: float


def _tail_std(arr, frac=0.2):
    tail = arr[int(round(arr.size * (1.0 - frac))):]
    return float(np.std(tail))


def simulate_lock(model: NestedModel, cav: Cavity, cfg: LockConfig,
                  duration: float, seed: int,
                  start_locked: bool = True) -> LockResult:
    """Closed-loop side-of-fringe lock against outer-resonator thermal motion.

    The loop starts on lock (actuator pre-positioned to null the initial
    motion) unless start_locked=False; acquisition from an arbitrary fringe
    position is not modelled.  lock_acquired is True when the error-signal
    rms (about its mean) over the last 20% of the run is at most 10% of the
    open-loop value and the actuator saturated for no more than 1% of the
    samples.
    """
    outer = model.outer
    if cfg.loop_rate < 20.0 * outer.f0:
        raise ValueError("loop_rate must be >= 20*outer.f0")
    fs = cfg.loop_rate
    dt = 1.0 / fs
    motion = synth_brownian(outer, fs, duration, seed)
    x = motion.values.tolist()
    n = len(x)

    hz_per_m = 2.0 * cav.fsr / cav.wavelength
    lw = cav.linewidth_fwhm
    bias = cfg.detuning_bias
    setpoint = cfg.setpoint
    if setpoint is None:
        setpoint = float(fringe_response(bias, cav))

    u_init = x[0] if start_locked else 0.0
    rng_range = cfg.actuator_range

    def run(kp, ki, kd):
        errs = np.empty(n)
        us = np.empty(n)
        dets = np.empty(n)
        u = u_init
        integ = 0.0
        e_prev = 0.0
        n_sat = 0
        for i in range(n):
            delta = bias + hz_per_m * (x[i] - u)
            r = 2.0 * delta / lw
            e = 1.0 / (1.0 + r * r) - setpoint
            errs[i] = e
            us[i] = u
            dets[i] = delta
            integ += ki * e * dt
            u = u_init + kp * e + integ + kd * (e - e_prev) / dt
            e_prev = e
            if u > rng_range:
                u = rng_range
                n_sat += 1
            elif u < -rng_range:
                u = -rng_range
                n_sat += 1
        return errs, us, dets, n_sat

    open_errs, _, open_dets, _ = run(0.0, 0.0, 0.0)
    errs, us, dets, n_sat = run(cfg.kp, cfg.ki, cfg.kd)

    open_rms = _tail_std(open_errs)
    closed_rms = _tail_std(errs)
    sat_frac = n_sat / n
    acquired = closed_rms <= 0.1 * open_rms and sat_frac <= 0.01

    mk = lambda arr: TimeSeries(fs, 0.0, arr, calibration=1.0)
    return LockResult(
        error_signal=mk(errs), actuator=mk(us), detuning=mk(dets),
        lock_acquired=acquired, saturation_fraction=sat_frac,
        open_loop_error_rms=open_rms, closed_loop_error_rms=closed_rms,
        open_loop_detuning_rms=_tail_std(open_dets),
        closed_loop_detuning_rms=_tail_std(dets),
    )


def optical_damping_rate(cfg: CoolingConfig, omega_m: float) -> float:
    """Optomechanical damping rate from a detuned drive, rad/s.

    G = g0^2 n_cav kappa [((k/2)^2+(D+w)^2)^-1 - ((k/2)^2+(D-w)^2)^-1];
    positive (cooling) for red detuning D < 0, zero at D = 0, and
    approaching 4 g0^2 n_cav / kappa at D = -w in the resolved limit.
    """
    if not omega_m > 0:
        raise ValueError("omega_m must be > 0")
    half_k_sq = (cfg.kappa / 2.0) ** 2
    plus = half_k_sq + (cfg.detuning + omega_m) ** 2
    minus = half_k_sq + (cfg.detuning - omega_m) ** 2
    return cfg.g0 ** 2 * cfg.n_cav * cfg.kappa * (1.0 / plus - 1.0 / minus)


def effective_temperature(mode: MechMode, gamma_opt: float) -> float:
    """Cold-damping mode temperature T * gamma_m / (gamma_m + gamma_opt)."""
    gamma_m = mode.gamma
    if gamma_opt <= -gamma_m:
        raise ValueError("gamma_opt <= -gamma_m: closed-loop system unstable")
    return mode.temp * gamma_m / (gamma_m + gamma_opt)
