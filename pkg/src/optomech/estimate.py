"""Analysis pipeline: PSD estimation, line-shape fits, transfer estimation.

welch_psd produces one-sided power spectral densities normalised so that a
sine of amplitude A integrates to A^2/2 over its peak.  fit_lorentzian and
fit_exp_decay share the damped least-squares core in fitting.py and report
1-sigma parameter uncertainties from the local curvature, rescaled by the
reduced chi^2 and (for spectra) by the variance inflation that windowing
and segment overlap introduce between neighbouring bins.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .fitting import lm_fit
from .synth import DriveRecord, TimeSeries

TWO_PI = 2.0 * np.pi


class EstimationError(ValueError):
    """Raised when an estimator cannot produce a meaningful result."""


@dataclass
class Spectrum:
    """One-sided PSD estimate.

    var_inflation is the variance inflation factor for averages of
    neighbouring bins caused by window leakage and segment overlap; fits use
    it to keep parameter uncertainties calibrated.
    """

    freqs: np.ndarray
    psd: np.ndarray
    n_avg: int
    resolution: float
    var_inflation: float = 1.0

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.psd = np.asarray(self.psd, dtype=float)
        if self.freqs.shape != self.psd.shape:
            raise ValueError("freqs and psd must have matching shapes")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")
        if np.any(self.psd < 0):
            raise ValueError("psd must be >= 0")
        if self.n_avg < 1:
            raise ValueError("n_avg must be >= 1")


@dataclass
class FitResult:
    """Fitted parameters with 1-sigma uncertainties."""

    params: dict
    sigmas: dict
    residual_norm: float
    converged: bool
    n_iter: int = 0
    warnings: tuple = ()


@dataclass
class TransferEstimate:
    """Log-binned transfer magnitude with within-bin scatter as error bars."""

    bin_centers: np.ndarray
    magnitude_db: np.ndarray
    errbar_db: np.ndarray
    dc_reference: float
    bin_counts: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    n_records: int = 0
    n_excluded: int = 0

    def __post_init__(self):
        self.bin_centers = np.asarray(self.bin_centers, dtype=float)
        if np.any(np.diff(self.bin_centers) <= 0):
            raise ValueError("bin centers must be strictly increasing")
        if np.any(np.asarray(self.errbar_db) < 0):
            raise ValueError("error bars must be >= 0")


_WINDOWS = {
    "boxcar": lambda n: np.ones(n),
    "hann": lambda n: 0.5 - 0.5 * np.cos(TWO_PI * np.arange(n) / n),
    "hamming": lambda n: 0.54 - 0.46 * np.cos(TWO_PI * np.arange(n) / n),
    "blackman": lambda n: (0.42 - 0.5 * np.cos(TWO_PI * np.arange(n) / n)
                           + 0.08 * np.cos(2 * TWO_PI * np.arange(n) / n)),
}


def _default_segment_len(n, overlap_frac, min_segments=8):
    denom = 1.0 + (min_segments - 1) * (1.0 - overlap_frac)
    seg = int(2 ** math.floor(math.log2(max(n / denom, 2.0))))
    return max(seg, 2)


def _variance_inflation(w, hop, n_segments):
    """Variance inflation of local bin averages from windowing and overlap."""
    n = w.size
    sw2 = float(np.sum(w * w))
    nu_window = n * float(np.sum(w ** 4)) / sw2 ** 2
    nu_overlap = 1.0
    if n_segments > 1:
        j = 1
        acc = 0.0
        while j * hop < n and j < n_segments:
            c = float(np.sum(w[: n - j * hop] * w[j * hop:])) / sw2
            acc += (1.0 - j / n_segments) * c * c
            j += 1
        nu_overlap = 1.0 + 2.0 * acc
    return nu_window * nu_overlap


def welch_psd(ts: TimeSeries, segment_len: int | None = None,
              overlap_frac: float = 0.5, window: str = "hann") -> Spectrum:
    """Averaged-periodogram PSD of a TimeSeries.

    Real records give the one-sided density on [0, fs/2].  Complex-envelope
    records give the equivalent one-sided density of the underlying physical
    signal on [center_freq - fs/2, center_freq + fs/2); it sums to half the
    envelope mean square, i.e. to the in-band physical mean square.
    """
    if not 0.0 <= overlap_frac <= 0.9:
        raise ValueError("overlap_frac must be in [0, 0.9]")
    if window not in _WINDOWS:
        raise ValueError(f"unknown window {window!r}; use one of {sorted(_WINDOWS)}")
    x = ts.values
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite samples")
    n = x.size
    fs = ts.sample_rate
    if segment_len is None:
        segment_len = _default_segment_len(n, overlap_frac)
    if segment_len > n:
        raise ValueError(f"segment_len {segment_len} exceeds record length {n}")
    if segment_len < 2:
        raise ValueError("segment_len must be >= 2")
    hop = max(1, int(round(segment_len * (1.0 - overlap_frac))))
    w = _WINDOWS[window](segment_len)
    sw2 = float(np.sum(w * w))
    starts = range(0, n - segment_len + 1, hop)
    n_avg = len(starts)

    if ts.is_complex:
        acc = np.zeros(segment_len)
        for s in starts:
            seg = x[s:s + segment_len] * w
            acc += np.abs(np.fft.fft(seg)) ** 2
        acc /= n_avg
        psd = np.fft.fftshift(acc) / (fs * sw2) / 2.0
        freqs = ts.center_freq + np.fft.fftshift(np.fft.fftfreq(segment_len, 1.0 / fs))
    else:
        nbins = segment_len // 2 + 1
        acc = np.zeros(nbins)
        for s in starts:
            seg = x[s:s + segment_len] * w
            acc += np.abs(np.fft.rfft(seg)) ** 2
        acc /= n_avg
        psd = acc * 2.0 / (fs * sw2)
        psd[0] /= 2.0
        if segment_len % 2 == 0:
            psd[-1] /= 2.0
        freqs = np.fft.rfftfreq(segment_len, 1.0 / fs)

    return Spectrum(freqs=freqs, psd=psd, n_avg=n_avg,
                    resolution=fs / segment_len,
                    var_inflation=_variance_inflation(w, hop, n_avg))


def _lorentzian_model(u, p):
    du, wdt, a, b = p
    c = 0.5 * wdt
    s = u - du
    den = s * s + c * c
    core = c * c / den
    m = a * core + b
    jac = np.empty((u.size, 4))
    jac[:, 0] = 2.0 * a * c * c * s / den ** 2
    jac[:, 1] = a * c * s * s / den ** 2
    jac[:, 2] = core
    jac[:, 3] = 1.0
    return m, jac


def _initial_lorentzian_guess(f, y):
    i_pk = int(np.argmax(y))
    n_edge = max(3, y.size // 10)
    edges = np.concatenate([y[:n_edge], y[-n_edge:]])
    offset0 = float(np.median(edges))
    amp0 = float(y[i_pk] - offset0)
    edge_scatter = float(np.std(edges))
    if amp0 <= 0 or amp0 <= 5.0 * edge_scatter:
        raise EstimationError("no peak above the baseline offset")
    half = offset0 + 0.5 * amp0
    f0 = float(f[i_pk])
    f_lo = f[0]
    for i in range(i_pk, 0, -1):
        if y[i] < half:
            f_lo = f[i] + (f[i + 1] - f[i]) * (half - y[i]) / (y[i + 1] - y[i])
            break
    f_hi = f[-1]
    for i in range(i_pk, y.size):
        if y[i] < half:
            f_hi = f[i - 1] + (f[i] - f[i - 1]) * (half - y[i - 1]) / (y[i] - y[i - 1])
            break
    fwhm0 = max(float(f_hi - f_lo), float(f[1] - f[0]))
    return f0, fwhm0, amp0, offset0


def fit_lorentzian(spec: Spectrum, window_hint=None, weighting: str = "statistical",
                   max_iter: int = 200) -> FitResult:
    """Fit amplitude*(fwhm/2)^2/((f-f0)^2+(fwhm/2)^2) + offset to a PSD peak.

    weighting="statistical" uses sigma_i proportional to the model PSD (the
    log-consistent choice for averaged-periodogram noise), iterating the
    weights once from the fitted model; "uniform" is a plain least squares.
    The derived quality factor q = f0/fwhm is attached with its propagated
    uncertainty.
    """
    if weighting not in ("statistical", "uniform"):
        raise ValueError("weighting must be 'statistical' or 'uniform'")
    f = spec.freqs
    y = spec.psd
    if window_hint is not None:
        lo, hi = window_hint
        mask = (f >= lo) & (f <= hi)
        if mask.sum() < 8:
            raise EstimationError("window_hint leaves too few bins to fit")
        f = f[mask]
        y = y[mask]

    f0_0, fwhm0, amp0, offset0 = _initial_lorentzian_guess(f, y)
    scale_f = fwhm0
    u = (f - f0_0) / scale_f
    v = y / amp0
    p0 = np.array([0.0, 1.0, 1.0, offset0 / amp0])

    model = lambda p: _lorentzian_model(u, p)
    floor = 1e-6
    n_passes = 2 if weighting == "statistical" else 1
    p = p0
    res = None
    for _ in range(n_passes):
        if weighting == "statistical":
            m0, _j = _lorentzian_model(u, p)
            sig = np.maximum(np.abs(m0), floor) / math.sqrt(spec.n_avg)
        else:
            sig = np.ones_like(v)
        res = lm_fit(model, p, v, sig, max_iter=max_iter)
        p = res.params

    dof = max(v.size - 4, 1)
    scale = res.cost / dof
    if weighting == "statistical":
        scale *= spec.var_inflation
    cov = res.cov * scale
    # back to physical units
    tr = np.array([scale_f, scale_f, amp0, amp0])
    cov = cov * np.outer(tr, tr)
    du, wdt, a, b = res.params
    f0 = f0_0 + du * scale_f
    fwhm = abs(wdt) * scale_f
    amplitude = a * amp0
    offset = b * amp0
    sig_diag = np.sqrt(np.maximum(np.diag(cov), 0.0))

    q = f0 / fwhm
    var_q = (cov[0, 0] / fwhm ** 2 + cov[1, 1] * f0 ** 2 / fwhm ** 4
             - 2.0 * cov[0, 1] * f0 / fwhm ** 3)
    sigma_q = math.sqrt(max(var_q, 0.0))

    warnings = []
    if spec.resolution > fwhm / 5.0:
        warnings.append("resolution_exceeds_fwhm_over_5")
    if not res.converged:
        warnings.append("max_iterations_reached")

    return FitResult(
        params={"f0_hz": f0, "fwhm_hz": fwhm, "amplitude": amplitude,
                "offset": offset, "q": q},
        sigmas={"f0_hz": sig_diag[0], "fwhm_hz": sig_diag[1],
                "amplitude": sig_diag[2], "offset": sig_diag[3], "q": sigma_q},
        residual_norm=math.sqrt(res.cost),
        converged=res.converged,
        n_iter=res.n_iter,
        warnings=tuple(warnings),
    )


def detect_onset(ts: TimeSeries, threshold_frac: float = 0.95) -> TimeSeries:
    """Trim pre-trigger samples: keep everything from the first crossing
    below threshold_frac times the initial plateau level."""
    x = np.asarray(ts.values, dtype=float)
    k = max(1, min(5, x.size // 10))
    padded = np.concatenate([np.full(k, x[0]), x, np.full(k, x[-1])])
    smooth = np.convolve(padded, np.ones(k) / k, mode="same")[k:-k]
    plateau = float(np.percentile(smooth, 98))
    below = np.nonzero(smooth < threshold_frac * plateau)[0]
    if below.size == 0:
        return ts
    start = max(int(below[0]) - 1, 0)
    if ts.n - start < 2:
        raise EstimationError("onset detection left fewer than 2 samples")
    return TimeSeries(ts.sample_rate, ts.t0 + start / ts.sample_rate,
                      x[start:], ts.calibration, ts.center_freq, ts.warnings)


def _exp_model(t, p):
    a, inv_tau, b = p
    e = np.exp(-t * inv_tau)
    m = a * e + b
    jac = np.empty((t.size, 3))
    jac[:, 0] = e
    jac[:, 1] = -a * t * e
    jac[:, 2] = 1.0
    return m, jac


def fit_exp_decay(ts: TimeSeries, cavity_length: float | None = None,
                  f0: float | None = None, max_iter: int = 200) -> FitResult:
    """Fit amplitude*exp(-t/tau) + offset to a decaying record.

    The record must begin at the decay onset (see detect_onset for trimming).
    When cavity_length is given, the equivalent finesse pi*c*tau/L is
    attached; when f0 is given, the mechanical quality factor of an amplitude
    envelope, q = w0*tau/2, is attached.
    """
    if ts.is_complex:
        raise ValueError("fit_exp_decay needs a real record")
    y = np.asarray(ts.values, dtype=float) * ts.calibration
    n = y.size
    t = np.arange(n) / ts.sample_rate
    n_edge = max(2, n // 10)
    head = float(np.mean(y[:n_edge]))
    tail = float(np.mean(y[-n_edge:]))
    span = float(np.max(y) - np.min(y))
    if head < tail and (tail - head) > 0.02 * max(span, 1e-300):
        raise EstimationError("record trend is rising, not a decay")

    # initial guesses on nondimensional axes
    t_span = t[-1] if t[-1] > 0 else 1.0
    y_scale = span if span > 0 else max(abs(head), 1e-300)
    offset0 = tail
    amp0 = head - offset0
    drop = (y - offset0) / (amp0 if amp0 != 0 else 1.0)
    idx = np.nonzero(drop < math.exp(-1.0))[0]
    tau0 = t[idx[0]] if idx.size else 0.5 * t_span
    tau0 = min(max(tau0, t_span * 1e-4), t_span * 10.0)

    tn = t / t_span
    vn = y / y_scale
    p0 = np.array([amp0 / y_scale, t_span / tau0, offset0 / y_scale])
    res = lm_fit(lambda p: _exp_model(tn, p), p0, vn,
                 np.ones_like(vn), max_iter=max_iter)
    a, inv_tau, b = res.params
    dof = max(n - 3, 1)
    cov = res.cov * (res.cost / dof)

    tau = t_span / inv_tau
    amplitude = a * y_scale
    offset = b * y_scale
    # propagate: tau = t_span/inv_tau -> dtau/dinv_tau = -t_span/inv_tau^2
    dtau = t_span / inv_tau ** 2
    sigma_tau = math.sqrt(max(cov[1, 1], 0.0)) * abs(dtau)
    sigma_amp = math.sqrt(max(cov[0, 0], 0.0)) * y_scale
    sigma_off = math.sqrt(max(cov[2, 2], 0.0)) * y_scale

    converged = res.converged
    warnings = []
    if tau > ts.duration:
        converged = False
        warnings.append("tau_exceeds_record_length")
    if not res.converged:
        warnings.append("max_iterations_reached")

    params = {"tau_s": tau, "amplitude": amplitude, "offset": offset}
    sigmas = {"tau_s": sigma_tau, "amplitude": sigma_amp, "offset": sigma_off}
    if cavity_length is not None:
        params["finesse"] = math.pi * SPEED_OF_LIGHT * tau / cavity_length
        sigmas["finesse"] = math.pi * SPEED_OF_LIGHT * sigma_tau / cavity_length
    if f0 is not None:
        params["q"] = math.pi * f0 * tau
        sigmas["q"] = math.pi * f0 * sigma_tau

    return FitResult(params=params, sigmas=sigmas,
                     residual_norm=math.sqrt(res.cost),
                     converged=converged, n_iter=res.n_iter,
                     warnings=tuple(warnings))


def demod_amplitude(ts: TimeSeries, freq: float):
    """Single-bin discrete correlation: calibrated amplitude of a tone.

    Returns (amplitude_m, detectable) where detectable compares the tone to
    the off-tone residual noise level in the same record.
    """
    x = np.asarray(ts.values, dtype=float) * ts.calibration
    n = x.size
    fs = ts.sample_rate
    n_cyc = math.floor(freq * n / fs)
    if n_cyc < 1:
        raise EstimationError(f"record too short to demodulate at {freq} Hz")
    n_use = min(int(round(n_cyc * fs / freq)), n)
    t = ts.t0 + np.arange(n_use) / fs
    xm = x[:n_use] - np.mean(x[:n_use])
    ph = np.exp(-1j * TWO_PI * freq * t)
    z = 2.0 * np.mean(xm * ph)
    amp = abs(z)
    resid = xm - np.real(z * np.conj(ph))  # subtract the fitted tone
    sigma_tone = float(np.std(resid)) * math.sqrt(2.0 / n_use)
    return amp, amp > 10.0 * sigma_tone


def _log_bin_edges(fmin, fmax, bins_per_decade):
    # top edge strictly above fmax so points on an edge land in a bin
    lo = math.floor(math.log10(fmin) * bins_per_decade + 1e-9)
    hi = math.floor(math.log10(fmax) * bins_per_decade + 1e-9) + 1
    return [10 ** (k / bins_per_decade) for k in range(lo, hi + 1)]


def bin_log_mean(freqs, values_db, bins_per_decade: int,
                 dc_cutoff_hz: float | None = None):
    """Average dB values in logarithmic frequency bins.

    Bin edges sit on the 10^(k/bins_per_decade) grid; bin centers are the
    geometric mean of the member frequencies and the error bar is the
    within-bin sample standard deviation.  With dc_cutoff_hz the mean of all
    bins below the cutoff (falling back to the lowest bin) is subtracted.
    Returns (centers, mean_db, std_db, counts, dc_reference).
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    freqs = np.asarray(freqs, dtype=float)
    values_db = np.asarray(values_db, dtype=float)
    edges = _log_bin_edges(freqs.min(), freqs.max(), bins_per_decade)
    centers, mags, errs, counts = [], [], [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (freqs >= lo) & (freqs < hi)
        if not mask.any():
            continue
        centers.append(float(np.exp(np.mean(np.log(freqs[mask])))))
        mags.append(float(np.mean(values_db[mask])))
        errs.append(float(np.std(values_db[mask], ddof=1)) if mask.sum() > 1
                    else 0.0)
        counts.append(int(mask.sum()))
    centers = np.array(centers)
    mags = np.array(mags)
    dc_reference = 0.0
    if dc_cutoff_hz is not None:
        ref = mags[centers < dc_cutoff_hz]
        if ref.size == 0:
            ref = mags[:1]          # fall back to the lowest bin
        dc_reference = float(np.mean(ref))
        mags = mags - dc_reference
    return (centers, mags, np.array(errs), np.array(counts, dtype=int),
            dc_reference)


def estimate_transfer(records, bins_per_decade: int = 5,
                      dc_cutoff_hz: float | None = None) -> TransferEstimate:
    """Binned transfer magnitude from a list of DriveRecords.

    Each record is demodulated at its drive frequency; the response/base
    amplitude ratio becomes 20*log10(ratio) dB.  Results are averaged in
    logarithmic bins whose error bar is the within-bin sample standard
    deviation.  If dc_cutoff_hz is given, the mean of all bins below it is
    subtracted so the low-frequency height reads zero, and that offset is
    reported as dc_reference.  Records whose base record shows no detectable
    drive tone are excluded and counted.
    """
    if not records:
        raise ValueError("no records given")
    pts = []
    n_excluded = 0
    for rec in records:
        base_amp, base_ok = demod_amplitude(rec.base_motion, rec.drive_freq)
        if not base_ok:
            n_excluded += 1
            continue
        resp_amp, _ = demod_amplitude(rec.response_motion, rec.drive_freq)
        pts.append((rec.drive_freq, 20.0 * math.log10(resp_amp / base_amp)))
    if not pts:
        raise EstimationError("all records were excluded (no drive tone found)")

    freqs = np.array([p[0] for p in pts])
    dbs = np.array([p[1] for p in pts])
    centers, mags, errs, counts, dc_reference = bin_log_mean(
        freqs, dbs, bins_per_decade, dc_cutoff_hz)
    return TransferEstimate(bin_centers=centers, magnitude_db=mags,
                            errbar_db=errs, dc_reference=dc_reference,
                            bin_counts=counts,
                            n_records=len(records), n_excluded=n_excluded)
