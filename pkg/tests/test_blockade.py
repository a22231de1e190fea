import math

import numpy as np
import pytest
from pydantic import ValidationError

from fermi_blockade import blockade
from fermi_blockade.blockade import (PhasePoint, SuppressionResult, occupation, overlap_ratio,
                                     sample_phase_space, suppression, suppression_homogeneous,
                                     suppression_mc, suppression_series, suppression_trapped,
                                     suppression_trapped_spatial)
from fermi_blockade.errors import DomainError, EfficiencyError
from fermi_blockade.gas import solve_fugacity, solve_fugacity_uniform, t_over_tf_from_mu
from fermi_blockade.observables import angle_to_k
from fermi_blockade.schemas import Confinement, Method
from fermi_blockade.specfun import fd_integral
from .functions import classical_overlap, homogeneous_s_spherical, zero_t_homogeneous_s



def test_occupation_should_be_half_at_chemical_potential(degenerate_state):
    assert occupation(degenerate_state, degenerate_state.mu_over_ef) == pytest.approx(0.5)
    point = PhasePoint(p=(0.1, 0.2, 0.0), q=(0.3, 0.0, 0.0))
    assert point.energy == pytest.approx(0.14)
    assert occupation(degenerate_state, point) == pytest.approx(
        occupation(degenerate_state, 0.14))
    values = occupation(degenerate_state, np.array([0.0, 0.5, 2.0]))
    assert np.all(np.diff(values) < 0)



def test_homogeneous_cold_gas_should_match_sphere_overlap(cold_uniform_state):
    for x in (0.2, 0.7, 1.3, 1.9):
        s = suppression_homogeneous(x, cold_uniform_state).s_value
        assert s == pytest.approx(zero_t_homogeneous_s(x), abs=2e-3)



def test_homogeneous_should_match_spherical_quadrature():
    state = solve_fugacity_uniform(0.3)
    for k in (0.3, 1.1):
        s = suppression_homogeneous(k, state).s_value
        assert s == pytest.approx(homogeneous_s_spherical(k, 0.3, state.beta_mu), abs=1e-7)



def test_harmonic_state_homogeneous_should_use_trap_center(degenerate_state):
    t_local = t_over_tf_from_mu(degenerate_state.beta_mu, Confinement.uniform)
    center = solve_fugacity_uniform(t_local)
    a = suppression_homogeneous(0.5, degenerate_state).s_value
    b = suppression_homogeneous(0.5, center).s_value
    assert a == pytest.approx(b, abs=1e-8)



def test_trapped_should_increase_with_transfer(degenerate_state):
    values = [suppression_trapped(k, degenerate_state).s_value for k in (0.0, 0.3, 0.8, 1.5, 4.0)]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert 0.2 < values[0] < 0.4
    assert values[-1] == pytest.approx(1.0, abs=1e-6)



def test_trapped_should_increase_with_temperature(degenerate_state, warm_state):
    assert (suppression_trapped(0.5, warm_state).s_value
            > suppression_trapped(0.5, degenerate_state).s_value)



def test_trapped_should_reproduce_detector_anchors(degenerate_state):
    s_24 = suppression_trapped(angle_to_k(24.0, 0.93), degenerate_state).s_value
    s_72 = suppression_trapped(angle_to_k(72.0, 0.93), degenerate_state).s_value
    assert 0.40 < s_24 < 0.65
    assert s_72 > 0.85



def test_classical_gas_should_follow_leading_fugacity_term(classical_state):
    t, beta_mu = classical_state.t_over_tf, classical_state.beta_mu
    for k in (0.0, 2.0, 8.0):
        s = suppression_trapped(k, classical_state).s_value
        assert 1.0 - s == pytest.approx(classical_overlap(k, t, beta_mu, 6), rel=1e-4, abs=2e-9)
    assert overlap_ratio(1.0, 0.5, -45.0, dims=4) == pytest.approx(
        classical_overlap(1.0, 0.5, -45.0, 4), rel=1e-12)



def test_series_should_agree_with_quadrature(dilute_state):
    for k in (0.0, 0.5, 1.5):
        series = suppression_series(k, dilute_state)
        quad = suppression_trapped(k, dilute_state)
        assert series.method == Method.series
        assert series.s_value == pytest.approx(quad.s_value, abs=1e-7)
        assert series.truncation_error < 1e-9



def test_series_should_refuse_degenerate_gas(degenerate_state):
    with pytest.raises(DomainError):
        suppression_series(0.5, degenerate_state)



@pytest.mark.slow
def test_spatial_reduction_should_agree_with_kernel(warm_state):
    k = 0.8
    direct = suppression_trapped_spatial(k, warm_state).s_value
    assert direct == pytest.approx(suppression_trapped(k, warm_state).s_value, abs=1e-6)



def test_mc_should_be_deterministic_per_seed(warm_state):
    a = suppression_mc(0.7, warm_state, n_samples=20_000, seed=7)
    b = suppression_mc(0.7, warm_state, n_samples=20_000, seed=7)
    c = suppression_mc(0.7, warm_state, n_samples=20_000, seed=8)
    assert a.s_value == b.s_value
    assert a.s_value != c.s_value
    assert a.std_error > 0
    assert 0.0 < a.acceptance <= 1.0



def test_mc_should_not_depend_on_thread_count(warm_state, monkeypatch):
    serial = suppression_mc(0.7, warm_state, n_samples=150_000, seed=3).s_value
    monkeypatch.setenv("FERMI_BLOCKADE_THREADS", "3")
    threaded = suppression_mc(0.7, warm_state, n_samples=150_000, seed=3).s_value
    assert serial == threaded



@pytest.mark.slow
def test_mc_should_agree_with_quadrature(warm_state):
    for k in (0.4, 1.2):
        mc = suppression_mc(k, warm_state, n_samples=400_000, seed=1)
        quad = suppression_trapped(k, warm_state)
        assert abs(mc.s_value - quad.s_value) < 5 * mc.std_error



def test_samples_should_follow_occupation(warm_state):
    sample = sample_phase_space(warm_state, 50_000, seed=2)
    assert sample.points.shape == (50_000, 6)
    assert sample.positions.shape == (50_000, 3)
    # mean energy of the trapped gas: 3 T f_4 / f_3 per unit E_F
    t, beta_mu = warm_state.t_over_tf, warm_state.beta_mu
    expected = 3.0 * t * fd_integral(4.0, beta_mu) / fd_integral(3.0, beta_mu)
    assert sample.energies.mean() == pytest.approx(expected, rel=2e-2)



def test_low_acceptance_should_raise(warm_state, monkeypatch):
    monkeypatch.setattr(blockade, "MC_MIN_ACCEPTANCE", 1.0)
    with pytest.raises(EfficiencyError):
        suppression_mc(0.5, warm_state, n_samples=20_000)



def test_mc_should_require_enough_samples(warm_state):
    with pytest.raises(DomainError):
        suppression_mc(0.5, warm_state, n_samples=100)



def test_dispatch_should_select_method(dilute_state):
    assert suppression(0.5, dilute_state, "series").method == Method.series
    assert suppression(0.5, dilute_state, Method.quadrature).method == Method.quadrature
    assert suppression(0.5, dilute_state, "homogeneous").method == Method.homogeneous
    with pytest.raises(ValueError):
        suppression(0.5, dilute_state, "bogus")



def test_invalid_kernel_arguments_should_raise():
    with pytest.raises(DomainError):
        overlap_ratio(-0.1, 0.3, 1.0)
    with pytest.raises(DomainError):
        overlap_ratio(0.5, 0.3, 1.0, dims=2)
    with pytest.raises(DomainError):
        overlap_ratio(0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        suppression_trapped(0.5, solve_fugacity_uniform(0.3))



def test_result_should_reject_out_of_range_value():
    with pytest.raises(ValidationError):
        SuppressionResult(s_value=1.2, method=Method.quadrature, samples_or_evals=1,
                          k_over_kf=0.5, t_over_tf=0.1)
    with pytest.raises(ValidationError):
        SuppressionResult(s_value=math.nan, method=Method.quadrature, samples_or_evals=1,
                          k_over_kf=0.5, t_over_tf=0.1)



def test_trapped_kernel_norm_should_follow_equation_of_state(degenerate_state, dilute_state):
    for state in (degenerate_state, dilute_state):
        norm = blockade.kernel_norm(state.t_over_tf, state.beta_mu, 6)
        assert norm == pytest.approx(math.pi ** 3 / 6, rel=1e-8)



def test_near_zero_temperature_homogeneous_should_match_sphere_overlap():
    state = solve_fugacity_uniform(1e-4)
    for x in np.arange(0.1, 2.0, 0.1):
        s = suppression_homogeneous(x, state).s_value
        assert s == pytest.approx(zero_t_homogeneous_s(x), abs=1e-5)
    for x in (2.0, 2.5, 3.0):
        assert suppression_homogeneous(x, state).s_value == pytest.approx(1.0, abs=1e-5)



def test_trapped_should_reproduce_cold_detector_values():
    state = solve_fugacity(0.13)
    assert 0.45 <= suppression_trapped(0.45, state).s_value <= 0.55
    assert suppression_trapped(2.07, state).s_value > 0.99



def test_series_and_quadrature_should_agree_on_panel():
    for t in (0.6, 0.7, 1.0, 2.0, 5.0):
        state = solve_fugacity(t)
        for k in (0.3, 1.2):
            series = suppression_series(k, state).s_value
            assert series == pytest.approx(suppression_trapped(k, state).s_value, abs=1e-5)



def test_warm_detector_values_should_match_series_oracle():
    state = solve_fugacity(0.7)
    for alpha, expected in ((24.0, 0.954061651), (72.0, 0.981926022)):
        k = angle_to_k(alpha, 0.93)
        assert suppression_series(k, state).s_value == pytest.approx(expected, abs=1e-5)
        assert suppression_trapped(k, state).s_value == pytest.approx(expected, abs=1e-5)



def test_mc_should_agree_with_quadrature_on_panel():
    panel = [(0.1, 0.2), (0.1, 1.4), (0.17, 0.6), (0.23, 2.2), (0.3, 1.0),
             (0.37, 0.4), (0.45, 1.8), (0.52, 0.8), (0.6, 1.2), (0.7, 2.0)]
    for i, (t, k) in enumerate(panel):
        state = solve_fugacity(t)
        mc = suppression_mc(k, state, n_samples=1_000_000, seed=i)
        quad = suppression_trapped(k, state)
        assert abs(mc.s_value - quad.s_value) < 3 * mc.std_error
    far = suppression_mc(5.0, solve_fugacity(0.3), n_samples=20_000, seed=1)
    assert far.s_value == pytest.approx(1.0, abs=1e-9)



@pytest.mark.slow
def test_trapped_should_rise_with_temperature_below_fermi_edge():
    temperatures = np.linspace(0.1, 0.7, 7)
    states = [solve_fugacity(t) for t in temperatures]
    for k in np.linspace(0.0, 1.4, 8):
        values = [suppression_trapped(k, state).s_value for state in states]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
