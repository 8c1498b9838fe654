import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from gratingmem.dynamics import TimeSequence, integrate_write
from gratingmem.errors import DegenerateSteadyState, ParameterError, UndefinedCoherence
from gratingmem.model import (I_SAT_B_CS, AtomParams, BeamSet, DensityMatrix3,
                              bloch_rhs_read, bloch_rhs_write, coherence_steady_closed,
                              coherence_steady_limit, rabi_from_intensity,
                              rabi_ratio_from_intensity, steady_state_write,
                              write_generator)

ELEMENTS = ("rho22", "rho_aa", "rho_bb", "sigma_a2", "sigma_b2", "rho_ab")

finite = st.floats(-1.0, 1.0, allow_nan=False)
amp = st.floats(0.0, 3.0, allow_nan=False)
phase = st.floats(-math.pi, math.pi, allow_nan=False)


def cplx(r, p):
    return r * complex(math.cos(p), math.sin(p))


def diff(a, b):
    return max(abs(getattr(a, k) - (b[k] if isinstance(b, dict) else getattr(b, k))) for k in ELEMENTS)


# --- parameters and units ---

def test_default_atom_relations():
    atom = AtomParams()
    assert atom.gamma22 == pytest.approx(2 * math.pi * 5.2e6)
    assert atom.gamma22 == pytest.approx(2 * atom.gamma12)
    assert atom.i_sat_a == pytest.approx(15 * atom.i_sat_b)
    assert atom.branch_a + atom.branch_b == pytest.approx(atom.gamma22)
    assert atom.gamma_ratio == pytest.approx(0.02)


def test_open_system_rejected():
    with pytest.raises(ParameterError):
        AtomParams(branch_a=1.0, branch_b=1.0)


def test_negative_rate_rejected():
    with pytest.raises(ParameterError):
        AtomParams(gamma_g=-1.0)


def test_time_conversion_round_trip():
    atom = AtomParams()
    assert atom.internal_to_us(atom.us_to_internal(2.9)) == pytest.approx(2.9, rel=1e-15)
    # 50 / Gamma12 is about 3 us at Gamma12 / 2pi = 2.6 MHz
    assert atom.internal_to_us(50) == pytest.approx(3.06, abs=0.01)


def test_rabi_ratio_examples():
    assert rabi_ratio_from_intensity(0.0, 1.3) == 0
    assert rabi_ratio_from_intensity(2 * 1.3, 1.3) == pytest.approx(1.0)
    assert rabi_ratio_from_intensity(8.0, 4.0) == pytest.approx(1.0)


def test_rabi_ratio_errors():
    with pytest.raises(ParameterError):
        rabi_ratio_from_intensity(1.0, 0.0)
    with pytest.raises(ParameterError):
        rabi_ratio_from_intensity(-1.0, 1.0)


def test_rabi_phase_convention():
    assert rabi_from_intensity(2.0, 1.0) == pytest.approx(1j)
    assert rabi_from_intensity(2.0, 1.0, math.pi / 2) == pytest.approx(-1.0)


def test_beamset_validation():
    with pytest.raises(ParameterError):
        BeamSet(theta=math.pi / 2)
    with pytest.raises(ParameterError):
        BeamSet(rescale_read=0.0)
    b = BeamSet(i_r=10.0, rescale_read=0.02, i_w=3.0, rescale_write_ratio=1.9)
    assert b.i_r_eff == pytest.approx(0.2)
    assert b.i_w_eff == pytest.approx(5.7)


def test_default_saturation_intensity_value():
    assert I_SAT_B_CS == pytest.approx(1.54322, rel=1e-5)


# --- write right-hand side ---

def test_rhs_dark_field_free_ground_state():
    d = bloch_rhs_write(DensityMatrix3.ground_mixture(), 0j, 0j, AtomParams())
    assert diff(d, DensityMatrix3(0, 0, 0, 0j, 0j, 0j)) == 0


def test_rhs_spontaneous_decay_only():
    atom = AtomParams.cesium(branch_fraction_a=0.3)
    d = bloch_rhs_write(DensityMatrix3(1.0, 0, 0, 0j, 0j, 0j), 0j, 0j, atom)
    assert d.rho22 == pytest.approx(-atom.gamma22_ratio)
    assert d.rho_aa == pytest.approx(atom.branch_a_ratio)
    assert d.rho_bb == pytest.approx(atom.branch_b_ratio)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=9, max_size=9), amp, phase, amp, phase,
       st.floats(0.0, 0.1), st.floats(0.0, 1.0))
def test_rhs_matches_master_equation(v, a, pa, b, pb, g, frac):
    atom = AtomParams.cesium(gamma_ratio=g, branch_fraction_a=frac)
    dm = DensityMatrix3.from_vector(v)
    ow, owp = cplx(a, pa), cplx(b, pb)
    ref = oracle.from_matrix(oracle.lindblad_rhs(oracle.to_matrix(dm), ow, owp, atom))
    assert diff(bloch_rhs_write(dm, ow, owp, atom), ref) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=9, max_size=9), amp, phase, amp, phase, st.floats(0.0, 0.1))
def test_rhs_trace_conservation(v, a, pa, b, pb, g):
    atom = AtomParams.cesium(gamma_ratio=g)
    d = bloch_rhs_write(DensityMatrix3.from_vector(v), cplx(a, pa), cplx(b, pb), atom)
    assert abs(d.rho22 + d.rho_aa + d.rho_bb) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=9, max_size=9), amp, phase, amp, phase)
def test_rhs_hermiticity(v, a, pa, b, pb):
    # conjugating the state and the fields conjugates the derivative
    atom = AtomParams()
    dm = DensityMatrix3.from_vector(v)
    ow, owp = cplx(a, pa), cplx(b, pb)
    d = bloch_rhs_write(dm, ow, owp, atom)
    dc = bloch_rhs_write(dm.conjugate(), np.conj(ow), np.conj(owp), atom)
    assert diff(dc, d.conjugate()) < 1e-12


def test_rhs_matches_finite_difference_of_trajectory():
    atom = AtomParams()
    ow, owp = 0.8 * np.exp(0.4j), 0.5j
    h = 1e-3
    traj = integrate_write(atom, ow, owp, TimeSequence(t_write=2.0, dt=h))
    errs = []
    for i in (200, 700, 1500):
        fd = (traj.states[i + 1] - traj.states[i - 1]) / (2 * h)
        rhs = bloch_rhs_write(traj.density_matrix(i), ow, owp, atom)
        errs.append(np.max(np.abs(fd - rhs.as_vector())))
    assert max(errs) < 1e-6  # O(h^2) with h = 1e-3


def test_generator_matches_rhs():
    atom = AtomParams()
    ow, owp = 0.3 + 0.2j, -0.7j
    L = write_generator(atom, ow, owp)
    y = np.random.default_rng(3).normal(size=9)
    assert np.allclose(L @ y, bloch_rhs_write(DensityMatrix3.from_vector(y), ow, owp, atom).as_vector(),
                       atol=1e-14)


# --- read right-hand side ---

def test_read_rhs_null_state():
    assert bloch_rhs_read(0j, 0j, 0.7j, AtomParams()) == (0, 0)


def test_read_rhs_pure_decay():
    atom = AtomParams()
    ds, dr = bloch_rhs_read(0j, 0.3 - 0.1j, 0j, atom)
    assert ds == 0
    assert dr == pytest.approx(-atom.gamma_ratio * (0.3 - 0.1j))


def test_read_rhs_matches_derivative_of_exact_solution():
    atom = AtomParams()
    om = 0.37 * np.exp(0.9j)
    rho_s = -0.3 + 0.2j
    t, h = 2.5, 1e-5
    y = oracle.read_solution(rho_s, om, atom.gamma_ratio, [t - h, t, t + h])
    fd = (y[2] - y[0]) / (2 * h)
    ds, dr = bloch_rhs_read(y[1, 0], y[1, 1], om, atom)
    assert abs(ds - fd[0]) < 1e-9 and abs(dr - fd[1]) < 1e-9


# --- steady state ---

def test_optical_pumping_into_dark_state():
    atom = AtomParams()
    s = steady_state_write(atom, 0.9j, 0j)
    assert s.rho_bb == pytest.approx(1.0, abs=1e-12)
    assert abs(s.rho_ab) < 1e-12 and s.rho22 == pytest.approx(0.0, abs=1e-12)


def test_zero_fields_without_ground_decay_is_degenerate():
    with pytest.raises(DegenerateSteadyState) as info:
        steady_state_write(AtomParams.cesium(gamma_ratio=0.0), 0j, 0j)
    assert info.value.null_dim == 4  # rho_aa, rho_bb, Re and Im rho_ab


def test_single_field_without_ground_decay_is_unique():
    # optical pumping still selects the dark state 1b uniquely
    s = steady_state_write(AtomParams.cesium(gamma_ratio=0.0), 0.6j, 0j)
    assert s.rho_bb == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("frac, g22", [(0.5, 2.0), (0.2, 2.0), (0.8, 1.4)])
def test_steady_state_matches_master_equation_null_space(frac, g22):
    import gratingmem.model as m
    atom = AtomParams(gamma12=m.GAMMA22_CS / 2, gamma22=g22 * m.GAMMA22_CS / 2,
                      gamma_g=0.02 * m.GAMMA22_CS / 2, branch_a=frac * g22 * m.GAMMA22_CS / 2,
                      branch_b=(1 - frac) * g22 * m.GAMMA22_CS / 2)
    ow, owp = 0.6 * np.exp(0.2j), 1.3 * np.exp(-0.5j)
    s = steady_state_write(atom, ow, owp)
    assert diff(s, oracle.from_matrix(oracle.steady_state(ow, owp, atom))) < 1e-12
    assert s.violations(1e-12) == []
    # the closed form holds for asymmetric branching and gamma22 != 2 gamma12 too
    assert coherence_steady_closed(atom, ow, owp) == pytest.approx(s.rho_ab, rel=1e-12)


def test_steady_state_paper_intensities():
    atom = AtomParams()
    b = BeamSet(i_w=5.0, i_wp=1.5)
    ow, owp = b.omega_w(atom), b.omega_wp(atom)
    s = steady_state_write(atom, ow, owp)
    assert s.rho_ab == pytest.approx(coherence_steady_closed(atom, ow, owp), rel=1e-12)


def test_small_gamma_limit_from_linear_solve():
    atom = AtomParams.cesium(gamma_ratio=1e-8)
    ow, owp = 0.4 * np.exp(0.7j), 0.9 * np.exp(-0.2j)
    s = steady_state_write(atom, ow, owp)
    assert s.rho_ab == pytest.approx(coherence_steady_limit(ow, owp), rel=1e-6)


def test_closed_vs_linear_solve_grid():
    grid_g = np.geomspace(1e-4, 0.1, 5)
    grid_o = np.geomspace(0.01, 3.0, 5)
    worst = 0.0
    for g in grid_g:
        atom = AtomParams.cesium(gamma_ratio=g)
        for a in grid_o:
            for b in grid_o:
                ow, owp = 1j * a, 1j * b * np.exp(0.3j)
                s = steady_state_write(atom, ow, owp)
                c = coherence_steady_closed(atom, ow, owp)
                worst = max(worst, abs(c - s.rho_ab) / abs(s.rho_ab))
    assert worst < 1e-10


def test_closed_form_symmetric_limit():
    atom = AtomParams.cesium(gamma_ratio=0.0)
    ow, owp = 0.8 * np.exp(0.3j), 0.8 * np.exp(1.4j)
    rho = coherence_steady_closed(atom, ow, owp)
    assert abs(rho) == pytest.approx(0.5)
    expected = np.angle(np.conj(ow) * owp) + math.pi
    assert np.exp(1j * np.angle(rho)) == pytest.approx(np.exp(1j * expected))


def test_closed_form_zero_probe():
    assert coherence_steady_closed(AtomParams(), 0.7j, 0j) == 0


def test_closed_form_undefined_without_fields():
    with pytest.raises(UndefinedCoherence):
        coherence_steady_closed(AtomParams(), 0j, 0j)


def test_closed_form_monotone_limit():
    ow, owp = 0.5j, 1.2 * np.exp(0.4j)
    lim = coherence_steady_limit(ow, owp)
    errs = [abs(coherence_steady_closed(AtomParams.cesium(gamma_ratio=g), ow, owp) - lim)
            for g in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0), phase, phase)
def test_phase_independent_of_intensity(a, b, pa, pb):
    ow, owp = cplx(a, pa), cplx(b, pb)
    rho = coherence_steady_closed(AtomParams.cesium(gamma_ratio=1e-9), ow, owp)
    target = -np.conj(ow) * owp
    assert np.angle(rho / target) == pytest.approx(0.0, abs=1e-9)
