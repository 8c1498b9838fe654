"""Exponential-decay fits and one-parameter intensity-rescale calibration."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .emission import (PulseTrace, fwhm_closed, peak_closed, pulse_energy_closed,
                       signal_fast)
from .errors import ParameterError
from .sweeps import Scenario, SweepTable, build_grating

INV_PHI = (math.sqrt(5) - 1) / 2


class BoundarySolutionWarning(UserWarning):
    """The optimum sits on a bound of the search interval."""


@dataclass(frozen=True)
class FitResult:
    estimates: dict
    rss: float
    iterations: int
    evaluations: int
    converged: bool
    info: dict = field(default_factory=dict)


def fit_exponential(t, y, convention="amplitude", max_iter=100):
    """Least-squares fit of y = A exp(-t/tau).

    Seeded by a straight-line fit to log(y), refined by Gauss-Newton on the
    linear-scale residual. ``convention`` says what the decay describes:
    "amplitude" reads 1/tau as the coherence decay rate gamma, "intensity"
    reads it as 2 gamma. Both are reported in ``estimates``.
    """
    if convention not in ("amplitude", "intensity"):
        raise ParameterError(f"unknown convention {convention!r}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.size < 3:
        raise ParameterError("need at least 3 (t, y) points")
    if np.any(y <= 0):
        raise ParameterError("y values must be > 0 for an exponential fit")
    if np.ptp(t) == 0:
        raise ParameterError("all t values are equal; decay time is undetermined")

    slope, intercept = np.polyfit(t, np.log(y), 1)
    amp, rate = math.exp(intercept), -slope
    evals = 1
    it = 0
    settled = False
    for it in range(1, max_iter + 1):
        e = np.exp(-rate * t)
        jac = np.column_stack([e, -amp * t * e])
        step, *_ = np.linalg.lstsq(jac, y - amp * e, rcond=None)
        amp += step[0]
        rate += step[1]
        evals += 1
        if abs(step[0]) <= 1e-13 * abs(amp) and abs(step[1]) <= 1e-13 * abs(rate) + 1e-300:
            settled = True
            break
    rss = float(np.sum((y - amp * np.exp(-rate * t)) ** 2))
    # a decay needs a resolvable positive rate
    resolvable = rate > 1e-12 / max(np.ptp(t), 1e-300)
    tau = 1.0 / rate if resolvable else math.inf
    gamma = (1.0 / tau if convention == "amplitude" else 0.5 / tau) if resolvable else 0.0
    return FitResult({"amplitude": amp, "tau": tau, "gamma": gamma,
                      "gamma_if_amplitude": 1 / tau if resolvable else 0.0,
                      "gamma_if_intensity": 0.5 / tau if resolvable else 0.0},
                     rss, it, evals, bool(resolvable and settled),
                     {"convention": convention})


def golden_section(f, a, b, xtol=1e-10, max_iter=500):
    """Minimize a unimodal ``f`` on [a, b] to bracket width ``xtol``.

    Returns (x, f(x), number of evaluations).
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > xtol and n < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    return x, fx, n


def _profiled_rss(model, data):
    mm = float(np.dot(model, model))
    if mm == 0:
        return float(np.dot(data, data)), 0.0
    scale = float(np.dot(model, data)) / mm
    r = data - scale * model
    return float(np.dot(r, r)), scale


def _table_model(scn, which, observable, values):
    """Model observable at the lab values of a sweep table, for one rescale candidate."""
    out = np.empty(len(values))
    for i, v in enumerate(values):
        if which == "a":
            s = replace(scn, beams=replace(scn.beams, i_r=float(v)))
        else:
            s = replace(scn, beams=replace(scn.beams, i_w=float(v)))
        i_r = s.beams.i_r_eff
        if observable == "fwhm":
            out[i] = s.atom.internal_to_us(fwhm_closed(s.atom, i_r)) if i_r > 0 else 0.0
            continue
        grating = build_grating(s)
        if observable == "energy":
            out[i] = pulse_energy_closed(grating, i_r, s.atom, s.norm)
        else:
            out[i] = peak_closed(grating, i_r, s.atom, s.norm)
    return out


def fit_scale_parameter(data, which, scn, bounds=None, observable="energy", tol=1e-10):
    """Golden-section least squares for a read (``which="a"``) or write-ratio
    (``which="a_prime"``) intensity rescale factor.

    ``data`` is a SweepTable swept over the matching lab intensity, or, for "a",
    a list of PulseTrace objects (times in microseconds, ``metadata["i_r"]`` in
    mW/cm^2). Overall amplitude is profiled out for energy, peak and traces;
    FWHM is compared in absolute time.
    """
    if which not in ("a", "a_prime"):
        raise ParameterError(f"which must be 'a' or 'a_prime', got {which!r}")
    if bounds is None:
        bounds = (1e-3, 1.0) if which == "a" else (0.1, 10.0)
    lo, hi = bounds
    if not 0 < lo < hi:
        raise ParameterError(f"bounds must satisfy 0 < lo < hi, got {bounds}")
    profiled = True

    if isinstance(data, SweepTable):
        expected = {"a": "i_r", "a_prime": "i_w"}[which]
        if data.param != expected:
            raise ParameterError(f"fitting {which} needs a sweep over {expected}, got {data.param}")
        if observable not in ("energy", "peak", "fwhm"):
            raise ParameterError(f"unknown observable {observable!r}")
        if observable == "fwhm" and which == "a_prime":
            raise ParameterError("pulse width does not depend on the write intensities")
        y = getattr(data, observable)
        profiled = observable != "fwhm"

        def model(s):
            if which == "a":
                s_ = replace(scn, beams=replace(scn.beams, rescale_read=s))
            else:
                s_ = replace(scn, beams=replace(scn.beams, rescale_write_ratio=s))
            return _table_model(s_, which, observable, data.values)
    else:
        traces = list(data)
        if which != "a" or not traces or not all(isinstance(tr, PulseTrace) for tr in traces):
            raise ParameterError("trace data can only calibrate the read rescale 'a'")
        y = np.concatenate([tr.values for tr in traces])
        observable = "trace"

        def model(s):
            parts = []
            for tr in traces:
                s_ = replace(scn, beams=replace(scn.beams, i_r=float(tr.metadata["i_r"]),
                                                rescale_read=s))
                t = tr.times if tr.time_unit == "gamma12" else s_.atom.us_to_internal(tr.times)
                g = build_grating(s_)
                parts.append(signal_fast(t, g, s_.beams.i_r_eff, s_.atom, s_.norm))
            return np.concatenate(parts)

    y = np.asarray(y, dtype=float)

    def objective(log_s):
        m = model(math.exp(log_s))
        if profiled:
            return _profiled_rss(m, y)[0]
        r = y - m
        return float(np.dot(r, r))

    log_lo, log_hi = math.log(lo), math.log(hi)
    x, fx, nev = golden_section(objective, log_lo, log_hi, xtol=tol)
    est = math.exp(x)
    at_bound = min(x - log_lo, log_hi - x) < 1e-6 * (log_hi - log_lo)
    if at_bound:
        warnings.warn(f"{which} estimate {est:.6g} sits on the search bound {bounds}",
                      BoundarySolutionWarning, stacklevel=2)
    m = model(est)
    scale = _profiled_rss(m, y)[1] if profiled else 1.0
    return FitResult({which: est, "scale": scale}, fx, nev, nev, not at_bound,
                     {"observable": observable, "bounds": tuple(bounds)})
