"""Observables of the retrieved D pulse.

Functions taking ``t`` use internal time (1/Gamma12). ``PulseTrace`` carries its
own time unit so traces converted to microseconds, or read from files, go
through the same FWHM / peak / energy code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .dynamics import read_envelope, read_rates
from .errors import ParameterError, TruncatedPulse, UndefinedCoherence
from .model import rabi_ratio_from_intensity


@dataclass(frozen=True)
class CloudGeometry:
    """Gaussian atom cloud (same rms width L on all axes) and the W' wavevector."""

    n_atoms: float
    rms_width: float
    k_wprime: tuple
    wavelength: float | None = None

    def __post_init__(self):
        k = np.asarray(self.k_wprime, dtype=float)
        if k.shape != (3,):
            raise ParameterError("k_wprime must be a 3-vector")
        object.__setattr__(self, "k_wprime", tuple(float(c) for c in k))
        if not self.n_atoms > 0:
            raise ParameterError(f"n_atoms must be > 0, got {self.n_atoms}")
        if not self.rms_width > 0:
            raise ParameterError(f"rms_width must be > 0, got {self.rms_width}")
        if self.wavelength is not None:
            k0 = 2 * math.pi / self.wavelength
            if abs(np.linalg.norm(k) - k0) > 1e-6 * k0:
                raise ParameterError("|k_wprime| must equal 2 pi / wavelength")

    @classmethod
    def from_beams(cls, beams, n_atoms, rms_width):
        """W along +z, W' tilted by theta in the x-z plane."""
        k0 = 2 * math.pi / beams.wavelength
        k = (k0 * math.sin(beams.theta), 0.0, k0 * math.cos(beams.theta))
        return cls(n_atoms, rms_width, k, beams.wavelength)


@dataclass(frozen=True)
class PulseTrace:
    times: np.ndarray
    values: np.ndarray
    time_unit: str = "gamma12"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("signal values must be >= 0")

    def __len__(self):
        return len(self.times)


def stored_coherence_modulus(i_w, i_wp, i_sat_a, i_sat_b, gamma_g, t_store):
    """|rho_s| in the small-gamma limit, from beam intensities.

    ``gamma_g * t_store`` must be dimensionless (e.g. both in Gamma12 units).
    Maximal (1/2) when I_W / I_W' = I_sa / I_sb.
    """
    i_w = np.asarray(i_w, dtype=float)
    i_wp = np.asarray(i_wp, dtype=float)
    denom = i_w * math.sqrt(i_sat_b / i_sat_a) + i_wp * math.sqrt(i_sat_a / i_sat_b)
    if np.any(denom == 0):
        raise UndefinedCoherence("both write intensities are zero")
    out = np.sqrt(i_w * i_wp) * math.exp(-gamma_g * t_store) / denom
    return float(out) if out.ndim == 0 else out


def f_read_profile(t, i_r, i_sat_b, params):
    """Temporal profile f_R(t) of the D field; depends only on the read beam.

    With time in 1/Gamma12 the Gamma12 normalization of the sinh term is 1.
    """
    x = rabi_ratio_from_intensity(i_r, i_sat_b)
    rates = read_rates(params, x)
    return x * read_envelope(rates, t)


def signal_fast(t, grating, i_r, params, norm):
    """Detected intensity A' |rho_s|^2 f_R(t)^2 for a detector faster than the pulse."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("t must be >= 0")
    f = f_read_profile(t, i_r, params.i_sat_b, params)
    return norm.amp_const * abs(grating.rho_ab_s) ** 2 * f * f


def intensity_decay_rate(params, i_r):
    """Slowest exponential rate of |f_R|^2 at late times."""
    rates = read_rates(params, rabi_ratio_from_intensity(i_r, params.i_sat_b))
    if rates.gamma2_sq > 0:
        return 2 * (rates.gamma1 - math.sqrt(rates.gamma2_sq))
    return 2 * rates.gamma1


def detector_lowpass(trace, tau):
    """First-order low-pass (time constant ``tau``, trace units) on a uniform grid."""
    dt = np.diff(trace.times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("detector model needs a uniformly sampled trace")
    alpha = math.exp(-dt[0] / tau)
    out = lfilter([1 - alpha], [1, -alpha], trace.values)
    return PulseTrace(trace.times, np.clip(out, 0, None), trace.time_unit,
                      {**trace.metadata, "detector_tau": tau})


def pulse_trace(grating, i_r, params, norm, t_read, dt, detector_tau=None, metadata=None):
    """Sample S_fast on [0, t_read] with step dt (internal units)."""
    n = max(1, math.ceil(t_read / dt - 1e-9))
    times = np.linspace(0.0, t_read, n + 1)
    trace = PulseTrace(times, signal_fast(times, grating, i_r, params, norm), "gamma12",
                       dict(metadata or {}))
    if detector_tau:
        trace = detector_lowpass(trace, detector_tau)
    return trace


def pulse_energy_closed(grating, i_r, params, norm):
    """Time integral of S_fast from 0 to infinity (internal time units).

    U = A' |rho_s|^2 / 2 * x / ((1 + g)(x + g)) with x = I_R/(2 I_sb), g = gamma/Gamma12.
    Increases with x toward A'|rho_s|^2 / (2(1 + g)); half of that at x = g.
    """
    x = np.asarray(i_r, dtype=float) / (2 * params.i_sat_b)
    g = params.gamma_ratio
    if np.any(x + g == 0):
        raise UndefinedCoherence("gamma and read intensity are both zero")
    out = norm.amp_const * abs(grating.rho_ab_s) ** 2 / 2 * x / ((1 + g) * (x + g))
    return float(out) if out.ndim == 0 else out


def pulse_energy_numeric(trace):
    if len(trace) < 2:
        raise ValueError("need at least two samples to integrate")
    return float(np.trapezoid(trace.values, trace.times))


def pulse_peak(trace):
    if len(trace) == 0:
        raise ValueError("empty trace")
    return float(np.max(trace.values))


def pulse_fwhm(trace):
    """Full width at half maximum around the global peak, by linear interpolation.

    Uses the half-maximum crossings adjacent to the peak, so an oscillatory
    trace is measured on its main lobe.
    """
    v, t = trace.values, trace.times
    if len(v) == 0:
        raise ValueError("empty trace")
    ip = int(np.argmax(v))
    peak = v[ip]
    if not peak > 0:
        raise ValueError("trace has no positive maximum")
    half = peak / 2
    below_left = np.nonzero(v[:ip] < half)[0]
    if below_left.size == 0:
        raise TruncatedPulse("left")
    i = below_left[-1]
    t_left = t[i] + (half - v[i]) * (t[i + 1] - t[i]) / (v[i + 1] - v[i])
    below_right = np.nonzero(v[ip:] < half)[0]
    if below_right.size == 0:
        raise TruncatedPulse("right")
    j = ip + below_right[0]
    t_right = t[j - 1] + (v[j - 1] - half) * (t[j] - t[j - 1]) / (v[j - 1] - v[j])
    return float(t_right - t_left)


def peak_time_closed(params, i_r):
    """Time of the maximum of |f_R|: tanh(g2 t) = g2/g1 (or its continuation)."""
    x = rabi_ratio_from_intensity(i_r, params.i_sat_b)
    if x == 0:
        raise ParameterError("no pulse without read light")
    rates = read_rates(params, x)
    g1, z = rates.gamma1, rates.gamma2_sq
    if z > 0:
        r = math.sqrt(z)
        return math.atanh(r / g1) / r
    if z < 0:
        r = math.sqrt(-z)
        return math.atan2(r, g1) / r
    return 1 / g1


def peak_closed(grating, i_r, params, norm):
    """Maximum of S_fast over t >= 0; zero without read light."""
    if i_r == 0:
        return 0.0
    return float(signal_fast(peak_time_closed(params, i_r), grating, i_r, params, norm))


def fwhm_closed(params, i_r):
    """FWHM of |f_R|^2 (main lobe) by root finding on the closed form."""
    t_pk = peak_time_closed(params, i_r)
    f = lambda t: f_read_profile(t, i_r, params.i_sat_b, params)
    half = f(t_pk) ** 2 / 2
    h = lambda t: f(t) ** 2 - half
    left = brentq(h, 0.0, t_pk, xtol=1e-14, rtol=1e-15)
    rates = read_rates(params, rabi_ratio_from_intensity(i_r, params.i_sat_b))
    if rates.gamma2_sq < 0:
        hi = math.pi / math.sqrt(-rates.gamma2_sq)
    else:
        hi = 2 * t_pk
        while h(hi) > 0:
            hi *= 2
    right = brentq(h, t_pk, hi, xtol=1e-14, rtol=1e-15)
    return right - left


def farfield_amplitude(k, t, grating, cloud, i_r, params, norm):
    """D-field amplitude radiated along wavevector ``k`` (rad/m, shape (..., 3)).

    Carrier exp(-i w t) dropped; 1/(4 pi eps0) and the dipole element are in
    ``norm.dipole_scale``. Peaked at k = -k_W' with Gaussian spread 1/L per axis.
    """
    q = np.asarray(k, dtype=float) + np.asarray(cloud.k_wprime)
    q2 = np.sum(q * q, axis=-1)
    f = f_read_profile(t, i_r, params.i_sat_b, params)
    pref = 1j * norm.dipole_scale * cloud.n_atoms * np.conj(grating.rho_ab_s) * f
    return pref * np.exp(-q2 * cloud.rms_width ** 2 / 2) / (2 * math.pi) ** 1.5


def grating_period(wavelength, theta):
    """Period of the interference grating written by two beams crossing at ``theta``."""
    if not 0 < theta <= math.pi:
        raise ParameterError(f"theta must be in (0, pi], got {theta}")
    return wavelength / (2 * math.sin(theta / 2))
