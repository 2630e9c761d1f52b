"""Deterministic, seeded generation of synthetic measurement records.

Covers every bench experiment the analysis pipeline consumes: Brownian
motion of a mode (baseband or band-centered complex envelope), optical and
mechanical ringdowns, driven transfer-function sweeps, and the nonlinear
side-of-fringe optical transduction.

All generators are pure functions of (inputs, seed): the same call returns
a bit-identical record.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import cavity as _cavity
from . import mech as _mech
from .mech import MechMode, NestedModel

TWO_PI = 2.0 * np.pi


@dataclass
class TimeSeries:
    """Uniformly sampled record.

    values are displacement in meters (or detector units with a calibration
    factor in m per unit).  center_freq > 0 marks a complex-envelope record
    z(t) whose physical signal is Re[z(t) * exp(2j*pi*center_freq*t)];
    baseband records are real with center_freq = 0.
    """

    sample_rate: float
    t0: float
    values: np.ndarray
    calibration: float = 1.0
    center_freq: float = 0.0
    warnings: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.values.size < 2:
            raise ValueError("a TimeSeries needs at least 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("TimeSeries values must be finite")

    @property
    def n(self):
        return self.values.size

    @property
    def duration(self):
        return self.n / self.sample_rate

    @property
    def times(self):
        return self.t0 + np.arange(self.n) / self.sample_rate

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)


@dataclass
class DriveRecord:
    """Base and response motion measured while driving at a single frequency."""

    drive_freq: float
    base_motion: TimeSeries
    response_motion: TimeSeries

    def __post_init__(self):
        if not self.drive_freq > 0:
            raise ValueError("drive_freq must be > 0")
        if self.base_motion.sample_rate != self.response_motion.sample_rate:
            raise ValueError("base and response must share a sample rate")
        if self.base_motion.n != self.response_motion.n:
            raise ValueError("base and response must have equal length")


@dataclass
class MechRingdown:
    """Raw oscillatory ringdown plus its lock-in style demodulated envelope."""

    raw: TimeSeries
    envelope: TimeSeries


def synth_brownian(mode: MechMode, sample_rate: float, duration: float,
                   seed: int, noise_floor: float = 0.0,
                   center_freq: float | None = None,
                   calibration: float = 1.0) -> TimeSeries:
    """Stationary Gaussian record whose PSD is thermal_psd(f) + noise_floor.

    Synthesis shapes a white Gaussian spectrum by sqrt of the target PSD and
    inverse transforms, so the target is hit exactly in expectation with no
    integrator bias even at Q ~ 1e5.

    With center_freq set, the record is a complex envelope covering
    [center_freq - sample_rate/2, center_freq + sample_rate/2]; use this for
    narrow lines where a baseband record would be enormous.
    """
    if noise_floor < 0:
        raise ValueError("noise_floor must be >= 0")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValueError("duration too short for the sample rate")
    rng = np.random.default_rng(seed)
    warnings = ()
    if duration * mode.f0 / mode.q < 10.0:
        warnings = ("duration_too_short_to_resolve_linewidth",)

    if center_freq is None:
        if sample_rate <= 4.0 * mode.f0:
            raise ValueError("baseband synthesis needs sample_rate > 4*f0; "
                             "use center_freq for a band-centered record")
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        target = _mech.thermal_psd(freqs, mode) + noise_floor
        a = rng.standard_normal(freqs.size)
        b = rng.standard_normal(freqs.size)
        amp = np.sqrt(target * sample_rate * n)
        spec = (a + 1j * b) * (amp / 2.0)
        spec[0] = a[0] * amp[0]                  # DC and Nyquist bins are real
        if n % 2 == 0:
            spec[-1] = a[-1] * amp[-1]
        values = np.fft.irfft(spec, n)
        return TimeSeries(sample_rate, 0.0, values, calibration, 0.0, warnings)

    if center_freq - sample_rate / 2.0 <= 0:
        raise ValueError("envelope band must lie at positive frequencies")
    deltas = np.fft.fftfreq(n, 1.0 / sample_rate)
    target = 2.0 * (_mech.thermal_psd(center_freq + deltas, mode) + noise_floor)
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    spec = (a + 1j * b) * np.sqrt(target * sample_rate * n / 2.0)
    values = np.fft.ifft(spec)
    return TimeSeries(sample_rate, 0.0, values, calibration, center_freq,
                      warnings)


def synth_optical_ringdown(cav: _cavity.Cavity, sample_rate: float,
                           duration: float, snr: float, seed: int,
                           p0: float = 1.0) -> TimeSeries:
    """Transmitted power after shutoff at t=0: p0*exp(-t/tau) plus white noise.

    The additive Gaussian noise has rms p0/snr; pass snr=inf for a clean
    exponential.
    """
    tau = cav.decay_tau
    if sample_rate < 20.0 / tau:
        raise ValueError("sample_rate must be >= 20/decay_tau")
    if duration < 5.0 * tau:
        raise ValueError("duration must be >= 5*decay_tau")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    values = p0 * np.exp(-t / tau)
    if np.isfinite(snr):
        rng = np.random.default_rng(seed)
        values = values + (p0 / snr) * rng.standard_normal(n)
    return TimeSeries(sample_rate, 0.0, values, calibration=1.0)


def demodulate_envelope(ts: TimeSeries, f0: float,
                        cycles_per_block: int = 10) -> TimeSeries:
    """Lock-in style amplitude envelope of an oscillation at f0.

    The record is mixed down at f0 and block-averaged over an integer number
    of carrier cycles; the output sample rate drops by the block length.
    """
    n_blk = int(round(cycles_per_block * ts.sample_rate / f0))
    if n_blk < 2:
        raise ValueError("too few samples per demodulation block")
    n_out = ts.n // n_blk
    if n_out < 2:
        raise ValueError("record too short for envelope demodulation")
    t = ts.times[:n_out * n_blk]
    x = np.asarray(ts.values[:n_out * n_blk], dtype=float)
    z = x * np.exp(-1j * TWO_PI * f0 * t)
    env = 2.0 * np.abs(z.reshape(n_out, n_blk).mean(axis=1))
    return TimeSeries(ts.sample_rate / n_blk, ts.t0 + 0.5 * n_blk / ts.sample_rate,
                      env, ts.calibration)


def synth_mech_ringdown(mode: MechMode, sample_rate: float, duration: float,
                        x0: float, seed: int, snr: float = np.inf,
                        envelope_cycles: int = 10) -> MechRingdown:
    """Free decay x(t) = x0*exp(-t/tau_a)*cos(w0*t) with tau_a = 2*Q/w0.

    Returns both the raw record and a demodulated envelope, mirroring a
    lock-in amplitude measurement.  Noise rms on the raw record is x0/snr.
    """
    if sample_rate < 8.0 * mode.f0:
        raise ValueError("sample_rate must be >= 8*f0 to resolve the carrier")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValueError("duration too short for the sample rate")
    t = np.arange(n) / sample_rate
    tau_a = 2.0 * mode.q / mode.omega0
    values = x0 * np.exp(-t / tau_a) * np.cos(mode.omega0 * t)
    if np.isfinite(snr):
        rng = np.random.default_rng(seed)
        values = values + (x0 / snr) * rng.standard_normal(n)
    raw = TimeSeries(sample_rate, 0.0, values, calibration=1.0)
    env = demodulate_envelope(raw, mode.f0, envelope_cycles)
    return MechRingdown(raw=raw, envelope=env)


def _steady_state_response(freq_hz, model, mass_ratio):
    """Complex displacement ratio response/base at one drive frequency."""
    w = TWO_PI * freq_hz
    if isinstance(model, NestedModel):
        if mass_ratio is None:
            raise ValueError("mass_ratio is required for a NestedModel sweep")
        return _mech.chain_response(w, model, mass_ratio)
    mode = model
    w02 = mode.omega0 ** 2
    return w02 / (w02 - w * w + 1j * mode.gamma * w)


def synth_drive_sweep(model, freqs, amplitude: float, cycles_per_point: int = 200,
                      seed: int = 0, mass_ratio: float | None = None,
                      samples_per_cycle: int = 32,
                      base_noise_rms: float = 0.0,
                      response_noise_rms: float = 0.0,
                      piezo_corner_hz: float | None = None) -> list:
    """Swept-sine vibration transmission experiment.

    For each drive frequency the base motion is a pure sine and the response
    is the steady-state chain output plus measurement noise; records start
    after the transient, i.e. each one is pure steady state.  model is a
    NestedModel (needs mass_ratio) or a single MechMode.  piezo_corner_hz
    optionally rolls off the drive amplitude with a first-order low pass,
    which affects base and response alike.
    """
    freqs = list(freqs)
    if any(f <= 0 for f in freqs):
        raise ValueError("drive frequencies must be > 0")
    if sorted(freqs) != freqs:
        raise ValueError("drive frequencies must be sorted ascending")
    if cycles_per_point < 50:
        raise ValueError("cycles_per_point must be >= 50")
    rng = np.random.default_rng(seed)
    records = []
    for f in freqs:
        fs = samples_per_cycle * f
        n = samples_per_cycle * cycles_per_point
        t = np.arange(n) / fs
        drive_amp = amplitude
        if piezo_corner_hz is not None:
            drive_amp = amplitude / math.sqrt(1.0 + (f / piezo_corner_hz) ** 2)
        h = _steady_state_response(f, model, mass_ratio)
        phase = TWO_PI * f * t
        base = drive_amp * np.sin(phase)
        resp = drive_amp * np.abs(h) * np.sin(phase + np.angle(h))
        if base_noise_rms > 0:
            base = base + base_noise_rms * rng.standard_normal(n)
        if response_noise_rms > 0:
            resp = resp + response_noise_rms * rng.standard_normal(n)
        records.append(DriveRecord(
            drive_freq=f,
            base_motion=TimeSeries(fs, 0.0, base),
            response_motion=TimeSeries(fs, 0.0, resp),
        ))
    return records


def transduce_side_of_fringe(x: TimeSeries, cav: _cavity.Cavity,
                             operating_detuning: float) -> TimeSeries:
    """Map displacement to detector signal through the full Lorentzian fringe.

    Mirror motion shifts the cavity resonance by (2*fsr/wavelength) Hz per
    meter; the output is the transmitted-power fringe evaluated at
    operating_detuning plus that shift, nonlinearity included.
    """
    if x.is_complex:
        raise ValueError("fringe transduction needs a real (baseband) record")
    hz_per_m = 2.0 * cav.fsr / cav.wavelength
    delta = operating_detuning + hz_per_m * (x.values * x.calibration)
    out = _cavity.fringe_response(delta, cav)
    return TimeSeries(x.sample_rate, x.t0, out, calibration=1.0)
