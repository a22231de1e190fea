"""Drive and detection budgets.

Order-of-magnitude numbers: multi-level structure of the transition and
collective effects are ignored, and the cross section is the two-level
cycling value.

"""
from typing import Optional
import math
import logging

from pydantic import validator

from .errors import DomainError
from .gas import GasScales, GasState, SpeciesParams, TrapGeometry
from .models import BaseModel
from .observables import DetectionAxis
from .profile import peak_column_density


logger = logging.getLogger(__name__)

# beyond this the excitation fraction rate x duration is no longer linear
LINEAR_EXCITATION_LIMIT = 0.3


class DriveParams(BaseModel):
    """Imaging drive.

    Attributes:
        saturation: s = I/I_sat
        detuning_gamma: Δ/Γ
        pulse_duration: s

    """
    saturation: float
    detuning_gamma: float
    pulse_duration: float

    @validator("saturation")
    def check_saturation(cls, v):
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError(f"saturation must be finite and >= 0, got {v}")
        return v

    @validator("detuning_gamma")
    def check_detuning(cls, v):
        if not math.isfinite(v):
            raise ValueError(f"detuning_gamma must be finite, got {v}")
        return v

    @validator("pulse_duration")
    def check_duration(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"pulse_duration must be finite and > 0, got {v}")
        return v

    def detuning(self, species: SpeciesParams) -> float:
        """Δ in rad/s."""
        return self.detuning_gamma * species.linewidth

    @property
    def broadening(self) -> float:
        """:math:`1 + s + (2\\Delta/\\Gamma)^2`."""
        return 1.0 + self.saturation + (2.0 * self.detuning_gamma) ** 2


EXPERIMENT_DRIVE = DriveParams(saturation=5.0, detuning_gamma=40.0, pulse_duration=1e-6)


class ScatteringRate(BaseModel):
    rate: float
    excitation_fraction: float
    linear: bool


class OpticalDensity(BaseModel):
    """Optical density along the trap z axis, all spin components."""
    od_resonant: float
    od_effective: float
    transmission: float
    peak_column_density: float
    cross_section: float
    n_spins: int


class PhotonBudget(BaseModel):
    photons: float
    solid_angle_fraction: float
    quantum_efficiency: float
    n_atoms_total: int


def natural_lifetime(species: SpeciesParams) -> float:
    return species.natural_lifetime


def resonant_cross_section(species: SpeciesParams) -> float:
    """Two-level cycling cross section :math:`3\\lambda^2/2\\pi` in m²."""
    return 3.0 * species.wavelength ** 2 / (2.0 * math.pi)


def scattering_rate(drive: DriveParams, species: SpeciesParams) -> ScatteringRate:
    """Photon scattering rate per atom and the excited fraction over the pulse.

    :math:`R = (\\Gamma/2)\\, s / (1 + s + (2\\Delta/\\Gamma)^2)`. The fraction
    ``R * pulse_duration`` is flagged non-linear above 0.3.

    """
    rate = 0.5 * species.linewidth * drive.saturation / drive.broadening
    fraction = rate * drive.pulse_duration
    linear = fraction <= LINEAR_EXCITATION_LIMIT
    if not linear:
        logger.warning(f"Excitation fraction {fraction:.3g} outside the linear regime")
    return ScatteringRate(rate=rate, excitation_fraction=fraction, linear=linear)


def optical_density(scales: GasScales, state: GasState, drive: DriveParams,
                    species: SpeciesParams, trap: TrapGeometry,
                    n_spins: int = 10) -> OpticalDensity:
    """Peak optical density through the cloud along z.

    The resonant OD is :math:`\\sigma_0 n_{col}(0)` summed over `n_spins`
    identical components; the driven OD divides it by the broadening
    :math:`1 + s + (2\\Delta/\\Gamma)^2`. Transmission is :math:`e^{-OD}` of the
    driven value.

    """
    if n_spins < 1:
        raise DomainError(f"n_spins must be >= 1, got {n_spins}")
    sigma = resonant_cross_section(species)
    column = peak_column_density(scales, state, trap)
    od_res = sigma * column * n_spins
    od_eff = od_res / drive.broadening
    return OpticalDensity(od_resonant=od_res, od_effective=od_eff,
                          transmission=math.exp(-od_eff), peak_column_density=column,
                          cross_section=sigma, n_spins=n_spins)


def solid_angle_fraction(numerical_aperture: float) -> float:
    """Fraction of the full sphere inside a cone of half-angle asin(NA)."""
    if not 0.0 <= numerical_aperture <= 1.0:
        raise DomainError(f"numerical_aperture must lie in [0, 1], got {numerical_aperture}")
    return 0.5 * (1.0 - math.sqrt(1.0 - numerical_aperture ** 2))


def photon_budget(scattering: ScatteringRate, axis: DetectionAxis, n_atoms_total: int,
                  quantum_efficiency: Optional[float] = None) -> PhotonBudget:
    """Expected photons detected on `axis` for an isotropic emitter.

    Args:
        scattering: Output of :func:`scattering_rate`
        axis: Detector; its quantum efficiency is used unless overridden
        n_atoms_total: Atoms of all spin components
        quantum_efficiency: Override of the detector efficiency, in [0, 1]

    """
    qe = axis.quantum_efficiency if quantum_efficiency is None else quantum_efficiency
    if not 0.0 <= qe <= 1.0:
        raise DomainError(f"quantum_efficiency must lie in [0, 1], got {qe}")
    fraction = solid_angle_fraction(axis.numerical_aperture)
    photons = n_atoms_total * scattering.excitation_fraction * qe * fraction
    return PhotonBudget(photons=photons, solid_angle_fraction=fraction,
                        quantum_efficiency=qe, n_atoms_total=n_atoms_total)
