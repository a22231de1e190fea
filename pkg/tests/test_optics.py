import logging
import math

import pytest
from pydantic import ValidationError

from fermi_blockade.errors import DomainError
from fermi_blockade.gas import EXPERIMENT_N_SPINS, EXPERIMENT_TRAP, SR87, solve_fugacity
from fermi_blockade.observables import EXPERIMENT_AXES, DetectionAxis
from fermi_blockade.optics import (EXPERIMENT_DRIVE, DriveParams, natural_lifetime, optical_density,
                                   photon_budget, resonant_cross_section, scattering_rate,
                                   solid_angle_fraction)


N_TOTAL = 18000 * EXPERIMENT_N_SPINS



def test_experiment_drive_should_give_reported_excitation():
    rate = scattering_rate(EXPERIMENT_DRIVE, SR87)
    assert EXPERIMENT_DRIVE.broadening == 6406.0
    assert rate.excitation_fraction == pytest.approx(0.0745, rel=2e-3)
    assert rate.linear
    assert EXPERIMENT_DRIVE.detuning(SR87) == pytest.approx(40 * SR87.linewidth)



def test_long_pulse_should_be_flagged_nonlinear(caplog):
    drive = DriveParams(saturation=5.0, detuning_gamma=0.0, pulse_duration=1e-6)
    with caplog.at_level(logging.WARNING, logger="fermi_blockade.optics"):
        rate = scattering_rate(drive, SR87)
    assert not rate.linear
    assert "linear" in caplog.text



def test_photon_budget_should_match_reported_count():
    rate = scattering_rate(EXPERIMENT_DRIVE, SR87)
    budget = photon_budget(rate, EXPERIMENT_AXES[0], N_TOTAL)
    assert budget.photons == pytest.approx(179.8, rel=5e-3)
    half = photon_budget(rate, EXPERIMENT_AXES[0], N_TOTAL, quantum_efficiency=0.5)
    assert half.photons == pytest.approx(0.5 * budget.photons)
    with pytest.raises(DomainError):
        photon_budget(rate, EXPERIMENT_AXES[0], N_TOTAL, quantum_efficiency=1.2)



def test_solid_angle_should_cover_hemisphere_at_unit_aperture():
    assert solid_angle_fraction(1.0) == 0.5
    assert solid_angle_fraction(0.0) == 0.0
    with pytest.raises(DomainError):
        solid_angle_fraction(1.5)



def test_optical_density_should_match_reported_values(experiment_scales):
    state = solve_fugacity(0.13)
    od = optical_density(experiment_scales, state, EXPERIMENT_DRIVE, SR87, EXPERIMENT_TRAP)
    assert od.cross_section == pytest.approx(3 * 461e-9 ** 2 / (2 * math.pi))
    # 117 at T = 0, thermal depletion of the center lowers it
    assert 105.0 < od.od_resonant < 117.0
    assert od.od_effective == pytest.approx(od.od_resonant / 6406.0)
    assert od.transmission == pytest.approx(math.exp(-od.od_effective))
    single = optical_density(experiment_scales, state, EXPERIMENT_DRIVE, SR87, EXPERIMENT_TRAP, n_spins=1)
    assert od.od_resonant == pytest.approx(EXPERIMENT_N_SPINS * single.od_resonant)
    with pytest.raises(DomainError):
        optical_density(experiment_scales, state, EXPERIMENT_DRIVE, SR87, EXPERIMENT_TRAP, n_spins=0)



def test_lifetime_and_cross_section_should_be_two_level_values():
    assert natural_lifetime(SR87) == pytest.approx(5.235e-9, rel=1e-3)
    assert resonant_cross_section(SR87) == pytest.approx(1.0147e-13, rel=1e-3)



def test_drive_should_reject_invalid_values():
    with pytest.raises(ValidationError):
        DriveParams(saturation=-1.0, detuning_gamma=0.0, pulse_duration=1e-6)
    with pytest.raises(ValidationError):
        DriveParams(saturation=1.0, detuning_gamma=0.0, pulse_duration=0.0)
    with pytest.raises(ValidationError):
        DetectionAxis(alpha=24.0, numerical_aperture=0.0)
