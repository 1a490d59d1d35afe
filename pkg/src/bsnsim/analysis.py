"""Time-series analysis and driven-response characterization of magnets."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .magnetics import MagnetParams, Trajectory, ensemble_moments


class AnalysisError(RuntimeError):
    pass


def _autocorr(x):
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f))[:n].real
    if acf[0] <= 0:
        raise AnalysisError("series has zero variance")
    return acf / acf[0]


def autocorrelation_time(traj, component: str | None = None,
                         sample_dt: float | None = None) -> float:
    """First 1/e crossing of the normalized autocorrelation [s].

    Accepts a Trajectory plus component name ('x'/'y'/'z'), or a raw series
    plus its sample interval.  Linear interpolation between lags; raises
    AnalysisError when the autocorrelation never drops below 1/e within
    half the record.
    """
    if isinstance(traj, Trajectory):
        series = traj.component(component or "x")
        sample_dt = traj.sample_dt
    else:
        series = np.asarray(traj, dtype=float)
        if sample_dt is None:
            raise AnalysisError("sample_dt required for raw series input")
    acf = _autocorr(series)
    target = 1.0 / np.e
    half = series.size // 2
    below = np.nonzero(acf[:half] < target)[0]
    if below.size == 0:
        raise AnalysisError("autocorrelation never crossed 1/e within half the record")
    k = int(below[0])
    if k == 0:
        # delta-correlated: crossing inside the first lag
        frac = (1.0 - target) / max(1.0 - acf[1], 1e-300) if series.size > 1 else 1.0
        tau = min(frac, 1.0) * sample_dt
    else:
        frac = (acf[k - 1] - target) / (acf[k - 1] - acf[k])
        tau = (k - 1 + frac) * sample_dt
    if tau > series.size * sample_dt / 100.0:
        warnings.warn("record shorter than 100x the correlation time", stacklevel=2)
    return tau


def power_spectrum(series, sample_dt: float, nperseg: int | None = None):
    """Welch power spectral density; returns (freq [Hz], psd)."""
    series = np.asarray(series, dtype=float)
    if nperseg is None:
        nperseg = min(series.size, 1 << 13)
    return signal.welch(series, fs=1.0 / sample_dt, nperseg=nperseg)


@dataclass
class ResponseCurve:
    """Long-time average output component versus the swept drive."""

    drive: np.ndarray
    mean_m: np.ndarray


def current_response(params: MagnetParams, i_s_values, h_ext, duration: float,
                     dt: float, seed: int, p_hat=(1.0, 0.0, 0.0),
                     p_eff: float = 1.0) -> ResponseCurve:
    """Sweep the spin current and average the component along p_hat.

    Each sweep point is an independent long-time simulation; negative
    currents flip the torque against p_hat.
    """
    i_s_values = np.asarray(i_s_values, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    mean_m, _ = ensemble_moments(params, duration, dt, seed, h_ext=h_ext,
                                 i_s=p_eff * i_s_values, p_hat=p_hat,
                                 n_replicas=i_s_values.size)
    return ResponseCurve(drive=i_s_values, mean_m=mean_m @ p_hat)


def inverse_slope(drive, mean_m, window: float = 0.3) -> float:
    """Inverse of the least-squares d<m>/d(drive) over |<m>| < window.

    This is the bias-current/pinning-field extraction: the drive scale that
    would saturate the response if the initial slope continued.
    """
    drive = np.asarray(drive, dtype=float)
    mean_m = np.asarray(mean_m, dtype=float)
    if mean_m.min() >= 0 or mean_m.max() <= 0:
        raise AnalysisError("response curve has no zero crossing in the sweep")
    mask = np.abs(mean_m) < window
    if mask.sum() < 3:
        raise AnalysisError("fewer than 3 points in the linear window |<m>| < 0.3")
    slope = np.polyfit(drive[mask], mean_m[mask], 1)[0]
    if slope <= 0:
        raise AnalysisError("nonpositive slope at the zero crossing")
    return 1.0 / slope


def bias_current(curve: ResponseCurve) -> float:
    """Bias current I_0 [A]: inverse slope of <m> vs I_S at the 50:50 point."""
    return inverse_slope(curve.drive, curve.mean_m)


def pinning_current(curve: ResponseCurve, factor: float = 4.0) -> float:
    """Current pinning the response, estimated as factor * I_0 (default 4,
    middle of the 3-5x range)."""
    return factor * bias_current(curve)


def field_response(params: MagnetParams, h_values, axis: str, duration: float,
                   dt: float, seed: int) -> ResponseCurve:
    """Sweep a field along the given axis and average that component of m."""
    h_values = np.asarray(h_values, dtype=float)
    idx = "xyz".index(axis)
    h_ext = np.zeros((h_values.size, 3))
    h_ext[:, idx] = h_values
    mean_m, _ = ensemble_moments(params, duration, dt, seed, h_ext=h_ext)
    return ResponseCurve(drive=h_values, mean_m=mean_m[:, idx])
