import math

import numpy as np
import pytest
from pydantic import ValidationError

from fermi_blockade.blockade import suppression_trapped
from fermi_blockade.errors import DomainError, ResolutionError
from fermi_blockade.gas import EXPERIMENT_TRAP, solve_fugacity
from fermi_blockade.observables import angle_to_k
from fermi_blockade.profile import (GridSpec, ScalarMap2D, atom_number, blocked_scattering_profile,
                                    cloud_diameter, column_density, gaussian_blur,
                                    local_suppression, map_total, peak_column_density, peak_density,
                                    radial_average)


@pytest.fixture(scope="module")
def profile_state():
    return solve_fugacity(0.12)


@pytest.fixture(scope="module")
def column(experiment_scales, profile_state):
    return column_density(experiment_scales, profile_state, EXPERIMENT_TRAP)



def test_column_density_should_hold_atom_number(experiment_scales, column):
    assert atom_number(experiment_scales) == pytest.approx(18000, rel=1e-9)
    assert map_total(column) == pytest.approx(18000, rel=1e-2)
    assert column.shape == (64, 64)
    assert column.units == "atoms/m^2"



def test_coarse_grid_should_raise(experiment_scales, profile_state):
    with pytest.raises(ResolutionError) as err:
        column_density(experiment_scales, profile_state, EXPERIMENT_TRAP,
                       GridSpec(n_x=8, n_y=8, pixel_size=1e-6))
    assert "expected" in err.value.diagnostics



def test_peak_density_should_approach_zero_temperature_value(experiment_scales):
    expected = experiment_scales.fermi_wavevector ** 3 / (6 * math.pi ** 2)
    assert peak_density(experiment_scales, solve_fugacity(0.05)) == pytest.approx(expected, rel=2e-2)



def test_cloud_diameter_should_match_fermi_radius(column, experiment_scales):
    assert cloud_diameter(column) == pytest.approx(20.5e-6, rel=5e-2)
    assert cloud_diameter(column) < 2 * experiment_scales.fermi_radii[0]
    with pytest.raises(DomainError):
        cloud_diameter(column, threshold=1.0)



def test_blur_should_keep_total_and_lower_peak(column):
    blurred = gaussian_blur(column, 3e-6)
    assert map_total(blurred) == pytest.approx(map_total(column), rel=1e-6)
    assert blurred.values.max() < column.values.max()
    assert np.array_equal(gaussian_blur(column, 0.0).values, column.values)
    with pytest.raises(DomainError):
        gaussian_blur(column, 60e-6)



def test_radial_average_of_constant_map_should_be_constant():
    grid_map = ScalarMap2D(values=np.full((16, 16), 2.5), pixel_size=1e-6, origin=(7.5, 7.5))
    profile = radial_average(grid_map, 1e-6)
    assert np.allclose(profile.means, 2.5)
    assert profile.counts.sum() == 256
    assert all(b > a for a, b in zip(profile.bin_centers, profile.bin_centers[1:]))
    with pytest.raises(DomainError):
        radial_average(grid_map, 1e-6, center=(20.0, 3.0))
    with pytest.raises(DomainError):
        radial_average(grid_map, 0.0)



def test_local_suppression_should_grow_outwards(profile_state):
    radius2 = np.array([0.0, 0.3, 0.8, 1.5, 4.0])
    ratio = local_suppression(0.45, profile_state, radius2)
    assert all(b > a for a, b in zip(ratio, ratio[1:]))
    assert ratio[-1] == pytest.approx(1.0, abs=1e-6)



def test_blocked_map_should_lie_below_column(experiment_scales, profile_state):
    k = angle_to_k(24.0, experiment_scales.ratio_kf_kr)
    maps = blocked_scattering_profile(experiment_scales, profile_state, EXPERIMENT_TRAP, k, n_nodes=24)
    assert np.all(maps.blocked.values <= maps.unblocked.values)
    assert maps.ratio.units == "1"
    n_y, n_x = maps.ratio.shape
    assert maps.ratio.values[n_y // 2, n_x // 2] < maps.ratio.values[0, 0]
    with pytest.raises(DomainError):
        blocked_scattering_profile(experiment_scales, profile_state, EXPERIMENT_TRAP, -1.0)



def test_map_should_reject_invalid_values():
    with pytest.raises(ValidationError):
        ScalarMap2D(values=np.full((4, 4), 1.0), pixel_size=1e-6, origin=(1.5, 1.5))
    with pytest.raises(ValidationError):
        ScalarMap2D(values=-np.ones((8, 8)), pixel_size=1e-6, origin=(3.5, 3.5))
    with pytest.raises(ValidationError):
        ScalarMap2D(values=np.ones((8, 8)), pixel_size=0.0, origin=(3.5, 3.5))



def test_column_map_should_peak_at_center_value(experiment_scales, profile_state, column):
    peak = peak_column_density(experiment_scales, profile_state, EXPERIMENT_TRAP)
    assert column.values.max() <= peak
    assert column.values.max() == pytest.approx(peak, rel=2e-2)



@pytest.mark.parametrize("t_over_tf", [0.12, 0.25, 0.5])
def test_integrated_maps_should_reproduce_global_suppression(experiment_scales, t_over_tf):
    state = solve_fugacity(t_over_tf)
    maps = blocked_scattering_profile(experiment_scales, state, EXPERIMENT_TRAP, 0.45)
    ratio = map_total(maps.blocked) / map_total(maps.unblocked)
    assert ratio == pytest.approx(suppression_trapped(0.45, state).s_value, abs=1e-3)



def test_classical_gas_should_not_block(experiment_scales):
    grid = GridSpec(n_x=64, n_y=64, pixel_size=3.2e-6)
    maps = blocked_scattering_profile(experiment_scales, solve_fugacity(5.0), EXPERIMENT_TRAP,
                                      0.45, grid)
    assert np.all(np.abs(maps.ratio.values - 1.0) < 1e-3)



def test_blurred_point_should_have_requested_width():
    values = np.zeros((33, 33))
    values[16, 16] = 1.0
    point = ScalarMap2D(values=values, pixel_size=0.25e-6, origin=(16.0, 16.0))
    blurred = gaussian_blur(point, 3e-6).values
    offsets = (np.arange(33) - 16.0) * 0.25e-6
    variance = (blurred.sum(axis=0) * offsets ** 2).sum() / blurred.sum()
    assert 4.0 * math.sqrt(variance) == pytest.approx(3e-6, abs=0.125e-6)



def test_blur_should_conserve_sum_of_random_map():
    values = np.random.default_rng(0).uniform(0.0, 1.0, size=(64, 64))
    noisy = ScalarMap2D(values=values, pixel_size=0.9e-6, origin=(31.5, 31.5))
    assert gaussian_blur(noisy, 3e-6).values.sum() == pytest.approx(values.sum(), rel=1e-9)



def test_radial_average_should_peak_on_ring():
    rows, cols = np.indices((65, 65))
    r = np.hypot(cols - 32.0, rows - 32.0) * 1e-6
    ring = ScalarMap2D(values=np.exp(-(r - 20.5e-6) ** 2 / (2 * 1.5e-6 ** 2)),
                       pixel_size=1e-6, origin=(32.0, 32.0))
    profile = radial_average(ring, 1e-6)
    assert profile.bin_centers[np.argmax(profile.means)] == pytest.approx(20.5e-6, abs=0.5e-6)



def test_blur_should_commute_with_radial_average():
    pixel, width, blur = 1e-6, 6e-6, 8e-6
    rows, cols = np.indices((64, 64))
    r2 = (np.hypot(cols - 31.5, rows - 31.5) * pixel) ** 2
    sigma2 = (blur / 4.0) ** 2
    gaussian = ScalarMap2D(values=np.exp(-r2 / (2 * width ** 2)), pixel_size=pixel,
                           origin=(31.5, 31.5))
    broadened = width ** 2 / (width ** 2 + sigma2) * np.exp(-r2 / (2 * (width ** 2 + sigma2)))
    blurred = radial_average(gaussian_blur(gaussian, blur), 2e-6)
    expected = radial_average(gaussian.with_values(broadened), 2e-6)
    keep = expected.means > 1e-2 * expected.means.max()
    assert np.allclose(blurred.means[keep], expected.means[keep], rtol=2e-3)
