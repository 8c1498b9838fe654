"""Three-level atom model: parameters, Bloch right-hand sides and write-phase steady state.

Levels are |1a>, |1b> (degenerate ground Zeeman pair) and |2> (excited).
W drives 1a-2, W' and R drive 1b-2, all on resonance in the rotating frame.

Internal units: time in 1/Gamma12, rates in Gamma12, Rabi frequencies as
Omega/Gamma12. Intensities enter only through the saturation ratio
I / (2 I_sat), whose square root is |Omega|/Gamma12.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSteadyState, ParameterError, UndefinedCoherence

# Cs D2 line
GAMMA22_CS = 2 * math.pi * 5.2e6  # rad/s
WAVELENGTH_CS_D2 = 852.347e-9  # m
# Steck's cycling-transition value (1.1023 mW/cm^2, relative strength 1/2) rescaled to
# F=3,m=+3 -> F'=2,m'=+2, relative strength 5/14.
I_SAT_B_CS = 1.1023 * 0.5 / (5 / 14)  # mW/cm^2
SAT_RATIO_CS = 15.0  # I_sa / I_sb from the Clebsch-Gordan ratio

# Layout of the real state vector used by the linear-algebra paths.
STATE_LABELS = ("rho22", "rho_aa", "rho_bb",
                "re_sigma_a2", "im_sigma_a2", "re_sigma_b2", "im_sigma_b2",
                "re_rho_ab", "im_rho_ab")
TRACE_ROW = np.array([1.0, 1.0, 1.0, 0, 0, 0, 0, 0, 0])


@dataclass(frozen=True)
class AtomParams:
    """Relaxation and saturation constants (rates in rad/s, intensities in mW/cm^2)."""

    gamma12: float = GAMMA22_CS / 2
    gamma22: float = GAMMA22_CS
    gamma_g: float = 0.02 * GAMMA22_CS / 2
    branch_a: float = GAMMA22_CS / 2
    branch_b: float = GAMMA22_CS / 2
    i_sat_a: float = SAT_RATIO_CS * I_SAT_B_CS
    i_sat_b: float = I_SAT_B_CS

    def __post_init__(self):
        for name in ("gamma12", "gamma22", "gamma_g", "branch_a", "branch_b", "i_sat_a", "i_sat_b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {value}")
        if self.gamma12 <= 0:
            raise ParameterError("gamma12 must be > 0")
        if self.i_sat_a <= 0 or self.i_sat_b <= 0:
            raise ParameterError("saturation intensities must be > 0")
        if abs(self.branch_a + self.branch_b - self.gamma22) > 1e-9 * max(self.gamma22, 1.0):
            raise ParameterError(
                f"branch_a + branch_b must equal gamma22 (closed system), got "
                f"{self.branch_a} + {self.branch_b} != {self.gamma22}")

    @classmethod
    def cesium(cls, gamma_ratio=0.02, gamma22=GAMMA22_CS, branch_fraction_a=0.5):
        """Cs F=3 -> F'=2 defaults with Gamma22 = 2 Gamma12 and the given gamma/Gamma12."""
        return cls(gamma12=gamma22 / 2, gamma22=gamma22, gamma_g=gamma_ratio * gamma22 / 2,
                   branch_a=branch_fraction_a * gamma22,
                   branch_b=(1 - branch_fraction_a) * gamma22)

    def with_gamma_ratio(self, gamma_ratio):
        return replace(self, gamma_g=gamma_ratio * self.gamma12)

    # dimensionless rates, in units of gamma12
    @property
    def gamma_ratio(self):
        return self.gamma_g / self.gamma12

    @property
    def gamma22_ratio(self):
        return self.gamma22 / self.gamma12

    @property
    def branch_a_ratio(self):
        return self.branch_a / self.gamma12

    @property
    def branch_b_ratio(self):
        return self.branch_b / self.gamma12

    @property
    def time_unit(self):
        """Seconds per internal time unit (1/gamma12)."""
        return 1.0 / self.gamma12

    def us_to_internal(self, t_us):
        return t_us * 1e-6 * self.gamma12

    def internal_to_us(self, t):
        return t * 1e6 / self.gamma12


def rabi_ratio_from_intensity(intensity, i_sat):
    """|Omega|/Gamma12 for a plane wave of the given intensity: sqrt(I / (2 I_sat))."""
    if not i_sat > 0:
        raise ParameterError(f"saturation intensity must be > 0, got {i_sat}")
    if np.any(np.asarray(intensity) < 0):
        raise ParameterError("intensity must be >= 0")
    return np.sqrt(intensity / (2.0 * i_sat))


def rabi_from_intensity(intensity, i_sat, phase=0.0):
    """Complex Omega/Gamma12 with the plane-wave convention i*sqrt(I/2I_s)*exp(i*phase)."""
    return 1j * rabi_ratio_from_intensity(intensity, i_sat) * np.exp(1j * phase)


@dataclass(frozen=True)
class BeamSet:
    """Beam intensities (mW/cm^2), write geometry and the two intensity rescale factors.

    ``rescale_read`` multiplies I_R; ``rescale_write_ratio`` multiplies the ratio
    I_W / I_W', applied here to I_W with I_W' held fixed.
    """

    i_w: float = 7.0
    i_wp: float = 1.0
    i_r: float = 8.0
    theta: float = 0.060
    wavelength: float = WAVELENGTH_CS_D2
    rescale_read: float = 1.0
    rescale_write_ratio: float = 1.0

    def __post_init__(self):
        for name in ("i_w", "i_wp", "i_r"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0 < self.theta < math.pi / 2:
            raise ParameterError(f"theta must be in (0, pi/2), got {self.theta}")
        if not self.wavelength > 0:
            raise ParameterError("wavelength must be > 0")
        for name in ("rescale_read", "rescale_write_ratio"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def i_r_eff(self):
        return self.rescale_read * self.i_r

    @property
    def i_w_eff(self):
        return self.rescale_write_ratio * self.i_w

    def omega_w(self, atom, phase=0.0):
        return rabi_from_intensity(self.i_w_eff, atom.i_sat_a, phase)

    def omega_wp(self, atom, phase=0.0):
        return rabi_from_intensity(self.i_wp, atom.i_sat_b, phase)

    def omega_r(self, atom, phase=0.0):
        return rabi_from_intensity(self.i_r_eff, atom.i_sat_b, phase)


@dataclass(frozen=True)
class DensityMatrix3:
    """Independent elements of the three-level density matrix (rotating frame).

    Also used to carry time derivatives, in which case the invariants do not apply.
    """

    rho22: float
    rho_aa: float
    rho_bb: float
    sigma_a2: complex
    sigma_b2: complex
    rho_ab: complex

    @classmethod
    def ground_mixture(cls):
        return cls(0.0, 0.5, 0.5, 0j, 0j, 0j)

    @classmethod
    def from_vector(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(float(y[0]), float(y[1]), float(y[2]),
                   complex(y[3], y[4]), complex(y[5], y[6]), complex(y[7], y[8]))

    def as_vector(self):
        return np.array([self.rho22, self.rho_aa, self.rho_bb,
                         self.sigma_a2.real, self.sigma_a2.imag,
                         self.sigma_b2.real, self.sigma_b2.imag,
                         self.rho_ab.real, self.rho_ab.imag])

    @property
    def trace(self):
        return self.rho22 + self.rho_aa + self.rho_bb

    def conjugate(self):
        return DensityMatrix3(self.rho22, self.rho_aa, self.rho_bb,
                              self.sigma_a2.conjugate(), self.sigma_b2.conjugate(),
                              self.rho_ab.conjugate())

    def swap_ground(self):
        """Relabel 1a <-> 1b."""
        return DensityMatrix3(self.rho22, self.rho_bb, self.rho_aa,
                              self.sigma_b2, self.sigma_a2, self.rho_ab.conjugate())

    def violations(self, tol=1e-8):
        out = []
        if abs(self.trace - 1.0) > tol:
            out.append(f"trace {self.trace!r} != 1")
        for name in ("rho22", "rho_aa", "rho_bb"):
            p = getattr(self, name)
            if p < -tol or p > 1 + tol:
                out.append(f"{name}={p!r} outside [0, 1]")
        minors = (("rho_ab", abs(self.rho_ab) ** 2, self.rho_aa * self.rho_bb),
                  ("sigma_a2", abs(self.sigma_a2) ** 2, self.rho_aa * self.rho22),
                  ("sigma_b2", abs(self.sigma_b2) ** 2, self.rho_bb * self.rho22))
        for name, lhs, rhs in minors:
            if lhs > rhs + tol:
                out.append(f"|{name}|^2 exceeds product of populations by {lhs - rhs:.3g}")
        return out


@dataclass(frozen=True)
class ReadRates:
    """gamma1 and the signed square gamma2^2, both in Gamma12 units."""

    gamma1: float
    gamma2_sq: float

    @property
    def regime(self):
        if self.gamma2_sq > 0:
            return "damped"
        if self.gamma2_sq < 0:
            return "oscillatory"
        return "critical"


@dataclass(frozen=True)
class SignalNormalization:
    """Arbitrary output scale: A' for the detected signal, plus a dipole/density prefactor."""

    amp_const: float = 1.0
    dipole_scale: float = 1.0

    def __post_init__(self):
        if not self.amp_const > 0:
            raise ParameterError(f"amp_const must be > 0, got {self.amp_const}")


def _write_derivs(r22, raa, rbb, sa, sb, rab, ow, owp, g, ga, gb, g22):
    # Works elementwise on scalars or arrays.
    drive_a = ow * sa
    drive_b = owp * sb
    d22 = 2 * np.real(drive_a + drive_b) - g22 * r22
    daa = -2 * np.real(drive_a) + ga * r22
    dbb = -2 * np.real(drive_b) + gb * r22
    dsa = -np.conj(ow) * (r22 - raa) + np.conj(owp) * rab - sa
    dsb = -np.conj(owp) * (r22 - rbb) + np.conj(ow) * np.conj(rab) - sb
    drab = -np.conj(ow) * np.conj(sb) - owp * sa - g * rab
    return d22, daa, dbb, dsa, dsb, drab


def bloch_rhs_write(state, omega_w, omega_wp, params):
    """Time derivative of ``state`` during the write phase (W and W' on, R off)."""
    d = _write_derivs(state.rho22, state.rho_aa, state.rho_bb,
                      state.sigma_a2, state.sigma_b2, state.rho_ab,
                      omega_w, omega_wp, params.gamma_ratio,
                      params.branch_a_ratio, params.branch_b_ratio, params.gamma22_ratio)
    return DensityMatrix3(float(d[0]), float(d[1]), float(d[2]),
                          complex(d[3]), complex(d[4]), complex(d[5]))


def write_generator(params, omega_w, omega_wp):
    """9x9 real matrix L with dy/dt = L y in the ``STATE_LABELS`` layout.

    Built column by column from the same right-hand side as ``bloch_rhs_write``;
    the equations are linear and homogeneous in the state.
    """
    basis = np.eye(9)
    d = _write_derivs(basis[0], basis[1], basis[2],
                      basis[3] + 1j * basis[4], basis[5] + 1j * basis[6], basis[7] + 1j * basis[8],
                      omega_w, omega_wp, params.gamma_ratio,
                      params.branch_a_ratio, params.branch_b_ratio, params.gamma22_ratio)
    return np.vstack([d[0], d[1], d[2], d[3].real, d[3].imag, d[4].real, d[4].imag,
                      d[5].real, d[5].imag])


def bloch_rhs_read(sigma_a2, rho_ab, omega_r, params):
    """Derivatives of (sigma_a2, rho_ab) during the read phase.

    This pair is closed: nothing else in the density matrix feeds it.
    """
    g = params.gamma_ratio
    dsigma = np.conj(omega_r) * rho_ab - sigma_a2
    drho = -omega_r * sigma_a2 - g * rho_ab
    return dsigma, drho


def read_generator(params, omega_r):
    """2x2 complex matrix M with d/dt (sigma_a2, rho_ab) = M (sigma_a2, rho_ab)."""
    return np.array([[-1.0, np.conj(omega_r)],
                     [-omega_r, -params.gamma_ratio]], dtype=complex)


def steady_state_write(params, omega_w, omega_wp, null_tol=1e-12):
    """Stationary state of the write phase by direct linear solve.

    The ``rho_aa`` equation is replaced by the trace condition. Raises
    ``DegenerateSteadyState`` when the generator has more than one null vector.
    """
    L = write_generator(params, omega_w, omega_wp)
    s = np.linalg.svd(L, compute_uv=False)
    null_dim = int(np.sum(s <= null_tol * s[0])) if s[0] > 0 else 9
    if null_dim != 1:
        raise DegenerateSteadyState(null_dim)
    M = L.copy()
    M[1] = TRACE_ROW
    rhs = np.zeros(9)
    rhs[1] = 1.0
    return DensityMatrix3.from_vector(np.linalg.solve(M, rhs))


def coherence_steady_closed(params, omega_w, omega_wp):
    """Closed-form stationary ground coherence rho_ab for arbitrary gamma."""
    a2 = np.abs(omega_w) ** 2
    b2 = np.abs(omega_wp) ** 2
    g = params.gamma_ratio
    weight = params.branch_a_ratio * b2 + params.branch_b_ratio * a2
    denom = weight * (g + a2 + b2) + 6 * g * a2 * b2
    if np.any(denom == 0):
        raise UndefinedCoherence("both write fields vanish; coherence is undefined")
    return -weight / denom * np.conj(omega_w) * omega_wp


def coherence_steady_limit(omega_w, omega_wp):
    """Small-gamma limit of the stationary coherence: -Omega_W* Omega_W' / (|Omega_W|^2 + |Omega_W'|^2)."""
    denom = np.abs(omega_w) ** 2 + np.abs(omega_wp) ** 2
    if np.any(denom == 0):
        raise UndefinedCoherence("both write fields vanish; coherence is undefined")
    return -np.conj(omega_w) * omega_wp / denom
