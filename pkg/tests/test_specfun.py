import math

import numpy as np
import pytest
from scipy import integrate

from fermi_blockade.errors import DomainError
from fermi_blockade.specfun import fd_integral, fd_integral_array, fd_series
from .functions import fd_at_zero



def test_fd_order_one_should_match_closed_form():
    for mu in (-30.0, -2.0, 0.0, 1.5, 40.0):
        assert fd_integral(1.0, mu) == pytest.approx(math.log1p(math.exp(mu)), rel=1e-9)



def test_fd_at_zero_should_match_eta_function():
    for s in (1.0, 1.5, 2.0, 2.5, 3.0):
        assert fd_integral(s, 0.0) == pytest.approx(fd_at_zero(s), rel=1e-9)



def test_fd_deep_boltzmann_should_keep_relative_accuracy():
    mu = -60.0
    for s in (1.5, 3.0):
        assert fd_integral(s, mu) == pytest.approx(math.exp(mu), rel=1e-9)



def test_fd_degenerate_should_follow_sommerfeld():
    mu = 200.0
    expected = mu ** 3 / 6.0 + math.pi ** 2 * mu / 6.0
    assert fd_integral(3.0, mu) == pytest.approx(expected, rel=1e-9)



def test_fd_series_should_agree_with_integral_for_small_fugacity():
    for s in (1.5, 2.0, 3.0):
        for mu in (-5.0, -1.0, math.log(0.5)):
            assert fd_series(s, mu) == pytest.approx(fd_integral(s, mu), rel=1e-9)



def test_fd_array_should_be_elementwise():
    mu = np.array([[-3.0, 0.0], [2.0, -3.0]])
    values = fd_integral_array(2.0, mu)
    assert values.shape == (2, 2)
    assert values[0, 0] == values[1, 1]
    assert values[1, 0] == pytest.approx(fd_integral(2.0, 2.0), rel=1e-12)



def test_fd_should_be_increasing_in_mu():
    values = [fd_integral(2.5, mu) for mu in np.linspace(-10, 10, 9)]
    assert all(b > a for a, b in zip(values, values[1:]))



def test_fd_invalid_order_should_raise():
    with pytest.raises(DomainError):
        fd_integral(0.5, 1.0)
    with pytest.raises(DomainError):
        fd_integral(2.0, math.inf)
    with pytest.raises(DomainError):
        fd_series(2.0, 0.5)



def test_fd_derivative_should_lower_the_order():
    h = 1e-3
    for s in (2.0, 2.5, 3.0):
        for mu in (-5.0, -1.0, 0.0, 2.0, 10.0):
            slope = (fd_integral(s, mu + h) - fd_integral(s, mu - h)) / (2.0 * h)
            assert slope == pytest.approx(fd_integral(s - 1.0, mu), rel=1e-6)



def test_fd_gaussian_average_should_raise_order_by_half():
    for s in (1.0, 1.5, 2.5):
        for mu in (-2.0, 0.5, 4.0):
            z_max = math.sqrt(mu + 60.0)
            value, _ = integrate.quad(lambda z: fd_integral(s, mu - z * z), -z_max, z_max,
                                      points=[0.0], epsabs=0.0, epsrel=1e-10, limit=200)
            assert value == pytest.approx(math.sqrt(math.pi) * fd_integral(s + 0.5, mu), rel=1e-7)



def test_fd_series_should_match_integral_for_every_order():
    for s in (1.0, 1.5, 2.0, 2.5, 3.0):
        for mu in (-20.0, -5.0, -1.0, -0.3, math.log(0.5)):
            assert abs(fd_series(s, mu) - fd_integral(s, mu)) < 1e-10



def test_fd_should_increase_on_a_dense_grid():
    grid = np.linspace(-40.0, 40.0, 321)
    for s in (1.0, 1.5, 2.0, 2.5, 3.0):
        values = fd_integral_array(s, grid)
        assert np.all(np.diff(values) > 0)



def test_fd_third_order_at_zero_should_be_three_quarters_zeta_three():
    assert fd_integral(3.0, 0.0) == pytest.approx(0.901542677, abs=1e-8)
