"""Write, storage and read phases in time.

All times are in units of 1/Gamma12.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSteadyState, IntegrationDiverged, ParameterError
from .model import (DensityMatrix3, ReadRates, read_generator, steady_state_write,
                    write_generator)

# Below this value of |z| t^2 the read kernel switches to its Taylor series.
TAYLOR_THRESHOLD = 1e-6
DIVERGENCE_TOL = 1e-8


@dataclass(frozen=True)
class TimeSequence:
    """Square-pulse timing: write, dark storage, read. Durations in 1/Gamma12."""

    t_write: float = 50.0
    t_store: float = 16.0
    t_read: float = 300.0
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("t_write", "t_store", "t_read", "dt"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.dt > 0.1 or self.dt > self.t_read / 100:
            raise ParameterError(
                f"dt={self.dt} too large: need dt <= 0.1 and dt <= t_read/100 = {self.t_read / 100}")


@dataclass(frozen=True)
class StoredGrating:
    rho_ab_s: complex
    t_store_applied: float = 0.0

    def __post_init__(self):
        if abs(self.rho_ab_s) > 0.5 + 1e-12:
            raise ParameterError(f"|rho_ab_s| = {abs(self.rho_ab_s)} exceeds 1/2")

    @property
    def modulus(self):
        return abs(self.rho_ab_s)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution. ``states`` is (n, 9) real for the write phase and
    (n, 2) complex, columns (sigma_a2, rho_ab), for the read phase."""

    times: np.ndarray
    states: np.ndarray
    steady_distance: Optional[float] = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def density_matrix(self, i):
        return DensityMatrix3.from_vector(self.states[i])

    @property
    def final(self):
        return self.states[-1]


def _step_grid(duration, dt):
    n = max(1, math.ceil(duration / dt - 1e-9))
    return n, duration / n


def rk4_propagator(generator, h):
    """One classical RK4 step for dy/dt = A y, written as a matrix.

    For a constant linear system the four stages collapse to the degree-4
    Taylor polynomial of exp(hA); iterating it is the RK4 method exactly.
    """
    hA = h * generator
    term = np.eye(len(generator), dtype=generator.dtype)
    P = term.copy()
    for k in range(1, 5):
        term = term @ hA / k
        P = P + term
    return P


def _march(P, y0, n):
    ys = np.empty((n + 1, len(y0)), dtype=P.dtype)
    ys[0] = y0
    y = ys[0]
    # a diverging march overflows; callers detect the non-finite rows
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            y = P @ y
            ys[i + 1] = y
    return ys


def integrate_write(params, omega_w, omega_wp, seq, init=None):
    """Fixed-step RK4 integration of the write-phase Bloch equations over [0, t_write].

    Raises ``IntegrationDiverged`` if the trace drifts by more than 1e-8 or a
    population leaves [-1e-8, 1 + 1e-8]. The returned trajectory records the
    max element-wise distance of the final state to the linear-solve steady state
    (None when that steady state is not unique).
    """
    if init is None:
        init = DensityMatrix3.ground_mixture()
    bad = init.violations(DIVERGENCE_TOL)
    if bad:
        raise ParameterError("initial state violates invariants: " + "; ".join(bad))
    n, h = _step_grid(seq.t_write, seq.dt)
    P = rk4_propagator(write_generator(params, omega_w, omega_wp), h)
    ys = _march(P, init.as_vector(), n)
    times = np.linspace(0.0, seq.t_write, n + 1)

    pops = ys[:, :3]
    with np.errstate(invalid="ignore"):
        drift = np.abs(pops.sum(axis=1) - 1.0)
        bad_rows = (drift > DIVERGENCE_TOL) | np.any(pops < -DIVERGENCE_TOL, axis=1) \
            | np.any(pops > 1 + DIVERGENCE_TOL, axis=1) | ~np.all(np.isfinite(ys), axis=1)
    if bad_rows.any():
        i = int(np.argmax(bad_rows))
        reason = (f"trace drift {drift[i]:.3g}" if drift[i] > DIVERGENCE_TOL
                  else "population outside [0, 1]")
        raise IntegrationDiverged(i, times[i], reason)

    try:
        steady = steady_state_write(params, omega_w, omega_wp).as_vector()
        distance = float(np.max(np.abs(ys[-1] - steady)))
    except DegenerateSteadyState:
        distance = None
    return Trajectory(times, ys, distance)


def apply_storage(steady, t_store, params):
    """Dark interval: optical coherences are gone, rho_ab decays as exp(-gamma t_store)."""
    if t_store < 0:
        raise ParameterError(f"t_store must be >= 0, got {t_store}")
    if t_store < 5:
        warnings.warn(f"t_store={t_store} < 5/Gamma12: optical coherences have not decayed",
                      stacklevel=2)
    rho = complex(steady.rho_ab) * math.exp(-params.gamma_ratio * t_store)
    return StoredGrating(rho, t_store)


def read_rates(params, omega_r):
    g = params.gamma_ratio
    return ReadRates(gamma1=(1 + g) / 2,
                     gamma2_sq=((1 - g) ** 2 - 4 * abs(omega_r) ** 2) / 4)


def _series(z, t):
    return t + z * t ** 3 / 6 + z * z * t ** 5 / 120


def read_kernel(z, t):
    """g(z, t) = sinh(sqrt(z) t)/sqrt(z), continued to sin(sqrt(-z) t)/sqrt(-z) for z < 0.

    An entire function of z; where |z| t^2 is tiny the series t + z t^3/6 + z^2 t^5/120
    replaces the quotient.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    small = np.abs(z) * t * t < TAYLOR_THRESHOLD
    out[small] = _series(z, t[small])
    tb = t[~small]
    if z > 0:
        r = math.sqrt(z)
        out[~small] = np.sinh(r * tb) / r
    elif z < 0:
        r = math.sqrt(-z)
        out[~small] = np.sin(r * tb) / r
    return float(out[0]) if scalar else out


def read_envelope(rates, t):
    """exp(-gamma1 t) * g(gamma2^2, t), evaluated without overflow at large t."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z, g1 = rates.gamma2_sq, rates.gamma1
    out = np.empty_like(t)
    small = np.abs(z) * t * t < TAYLOR_THRESHOLD
    ts = t[small]
    out[small] = np.exp(-g1 * ts) * _series(z, ts)
    tb = t[~small]
    if z > 0:
        r = math.sqrt(z)
        # exp(-g1 t) sinh(r t) / r == exp(-(g1 - r) t) (1 - exp(-2 r t)) / (2 r)
        out[~small] = np.exp(-(g1 - r) * tb) * -np.expm1(-2 * r * tb) / (2 * r)
    elif z < 0:
        r = math.sqrt(-z)
        out[~small] = np.exp(-g1 * tb) * np.sin(r * tb) / r
    return float(out[0]) if scalar else out


def sigma_read_closed(grating, omega_r, params, t):
    """Optical coherence sigma_a2(t) during readout, from the closed-form solution."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("t must be >= 0")
    rates = read_rates(params, omega_r)
    return np.conj(omega_r) * grating.rho_ab_s * read_envelope(rates, t)


def integrate_read(grating, omega_r, params, seq):
    """Fixed-step RK4 integration of the read pair from sigma_a2 = 0, rho_ab = rho_s.

    |sigma_a2|^2 + |rho_ab|^2 can only decrease; growth beyond 1e-8 (relative)
    is reported as divergence.
    """
    n, h = _step_grid(seq.t_read, seq.dt)
    P = rk4_propagator(read_generator(params, omega_r), h)
    ys = _march(P, np.array([0j, complex(grating.rho_ab_s)]), n)
    times = np.linspace(0.0, seq.t_read, n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        norm = np.sum(np.abs(ys) ** 2, axis=1)
    limit = norm[0] * (1 + DIVERGENCE_TOL) + 1e-300
    bad = (norm > limit) | ~np.isfinite(norm)
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationDiverged(i, times[i], "read-phase norm increased")
    return Trajectory(times, ys)
