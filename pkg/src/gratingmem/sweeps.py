"""Write-store-read pipeline and parameter sweeps that regenerate the theory curves."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import StoredGrating
from .emission import (intensity_decay_rate, pulse_energy_closed, pulse_energy_numeric,
                       pulse_fwhm, pulse_peak, pulse_trace, stored_coherence_modulus)
from .errors import TruncatedPulse
from .model import AtomParams, BeamSet, SignalNormalization, coherence_steady_closed

WORKERS_ENV = "GRATINGMEM_WORKERS"
# Numeric energy integrates over at least this many intensity decay times.
WINDOW_DECAY_TIMES = 50


@dataclass(frozen=True)
class Scenario:
    """Everything a sweep row needs besides the swept value. Times in 1/Gamma12.

    ``write_coherence`` selects the stored coherence: "limit" uses the small-gamma
    intensity formula, "full" the finite-gamma steady state.
    """

    atom: AtomParams = field(default_factory=AtomParams)
    beams: BeamSet = field(default_factory=BeamSet)
    t_store: float = 16.0
    norm: SignalNormalization = field(default_factory=SignalNormalization)
    dt: float = 1e-3
    t_read: float = 300.0
    write_coherence: str = "limit"
    detector_tau: float | None = None

    def __post_init__(self):
        if self.write_coherence not in ("limit", "full"):
            raise ValueError(f"write_coherence must be 'limit' or 'full', got {self.write_coherence!r}")


def build_grating(scn):
    """Stored coherence after the write pulse and the storage interval."""
    atom, beams = scn.atom, scn.beams
    i_w = beams.i_w_eff
    if i_w == 0 and beams.i_wp == 0:
        return StoredGrating(0j, scn.t_store)
    if scn.write_coherence == "limit":
        mod = stored_coherence_modulus(i_w, beams.i_wp, atom.i_sat_a, atom.i_sat_b,
                                       atom.gamma_ratio, scn.t_store)
        # phase of -conj(Omega_W) Omega_W' for the i*sqrt(x) plane-wave convention
        phase = np.conj(beams.omega_w(atom)) * beams.omega_wp(atom)
        sign = phase / abs(phase) if phase != 0 else 1.0
        return StoredGrating(complex(-mod * sign), scn.t_store)
    rho = coherence_steady_closed(atom, beams.omega_w(atom), beams.omega_wp(atom))
    return StoredGrating(complex(rho * math.exp(-atom.gamma_ratio * scn.t_store)), scn.t_store)


def read_window(scn):
    if scn.beams.i_r_eff == 0:
        return scn.t_read
    return max(scn.t_read, WINDOW_DECAY_TIMES / intensity_decay_rate(scn.atom, scn.beams.i_r_eff))


def retrieved_trace(scn):
    grating = build_grating(scn)
    trace = pulse_trace(grating, scn.beams.i_r_eff, scn.atom, scn.norm, read_window(scn), scn.dt,
                        detector_tau=scn.detector_tau)
    return grating, trace


def evaluate_row(scn):
    """(fwhm, peak, energy, energy_numeric) in internal time units; zeros if no pulse."""
    grating, trace = retrieved_trace(scn)
    peak = pulse_peak(trace)
    if peak == 0:
        return 0.0, 0.0, 0.0, 0.0
    energy = pulse_energy_closed(grating, scn.beams.i_r_eff, scn.atom, scn.norm)
    return pulse_fwhm(trace), peak, energy, pulse_energy_numeric(trace)


@dataclass(frozen=True)
class SweepTable:
    """One row per swept value; fwhm and energy in microseconds (energy in A' us)."""

    param: str
    values: np.ndarray
    fwhm: np.ndarray
    peak: np.ndarray
    energy: np.ndarray
    energy_numeric: np.ndarray
    fixed: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("values", "fwhm", "peak", "energy", "energy_numeric"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("swept values must be strictly increasing")
        for name in ("fwhm", "peak", "energy", "energy_numeric"):
            col = getattr(self, name)
            if col.shape != self.values.shape:
                raise ValueError(f"column {name} has the wrong length")
            if not np.all(np.isfinite(col)) or np.any(col < 0):
                raise ValueError(f"column {name} must be finite and >= 0")

    def __len__(self):
        return len(self.values)

    def rows(self):
        return list(zip(self.values, self.fwhm, self.peak, self.energy, self.energy_numeric))

    def normalized_peak(self):
        return self.peak / self.peak[0]


def worker_count(default=None):
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return default or min(4, os.cpu_count() or 1)


def _run(param, grid, scenarios, unit_label, workers):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    def row(i):
        try:
            return evaluate_row(scenarios[i])
        except TruncatedPulse as exc:
            raise TruncatedPulse(exc.side, f"{param}={grid[i]!r}") from exc

    n = len(grid)
    workers = worker_count(workers)
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(row, range(n)))
        # pool.map preserves grid order
    else:
        out = [row(i) for i in range(n)]
    arr = np.array(out, dtype=float).reshape(n, 4)
    atom = scenarios[0].atom
    to_us = atom.internal_to_us(1.0)
    base = scenarios[0]
    fixed = describe(base)
    fixed["swept"] = unit_label
    return SweepTable(param, grid, arr[:, 0] * to_us, arr[:, 1], arr[:, 2] * to_us,
                      arr[:, 3] * to_us, fixed)


def describe(scn):
    a, b = scn.atom, scn.beams
    return {
        "gamma22_2pi_mhz": a.gamma22 / (2 * math.pi * 1e6),
        "gamma12_2pi_mhz": a.gamma12 / (2 * math.pi * 1e6),
        "gamma_g_per_gamma12": a.gamma_ratio,
        "branch_a_fraction": a.branch_a / a.gamma22 if a.gamma22 else 0.5,
        "i_sat_a_mw_per_cm2": a.i_sat_a,
        "i_sat_b_mw_per_cm2": a.i_sat_b,
        "i_w_mw_per_cm2": b.i_w,
        "i_wp_mw_per_cm2": b.i_wp,
        "i_r_mw_per_cm2": b.i_r,
        "rescale_read": b.rescale_read,
        "rescale_write_ratio": b.rescale_write_ratio,
        "t_store_us": a.internal_to_us(scn.t_store),
        "dt_gamma12_units": scn.dt,
        "amp_const": scn.norm.amp_const,
        "write_coherence": scn.write_coherence,
        "detector_tau_gamma12_units": scn.detector_tau or 0.0,
    }


def sweep_read_intensity(i_r_grid, scn, workers=None):
    """Rows over the lab read intensity (mW/cm^2); ``rescale_read`` is applied per row."""
    scns = [replace(scn, beams=replace(scn.beams, i_r=float(v))) for v in i_r_grid]
    return _run("i_r", i_r_grid, scns, "i_r_mw_per_cm2", workers)


def sweep_write_intensity(i_w_grid, scn, workers=None):
    scns = [replace(scn, beams=replace(scn.beams, i_w=float(v))) for v in i_w_grid]
    return _run("i_w", i_w_grid, scns, "i_w_mw_per_cm2", workers)


def sweep_storage_time(t_s_grid_us, scn, workers=None):
    """Rows over storage time given in microseconds."""
    scns = [replace(scn, t_store=scn.atom.us_to_internal(float(v))) for v in t_s_grid_us]
    return _run("t_store", t_s_grid_us, scns, "t_store_us", workers)


def write_optimum(atom, beams):
    """Lab I_W that maximizes the stored coherence for fixed I_W'."""
    return (atom.i_sat_a / atom.i_sat_b) * beams.i_wp / beams.rescale_write_ratio
