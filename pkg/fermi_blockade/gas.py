"""Physical-to-reduced bridge.

Everything downstream works in reduced units: energies in :math:`E_F = k_B T_F`,
momenta in :math:`\\hbar k_F` and trap coordinates rescaled so that the
potential energy of a point :math:`\\tilde q` is :math:`|\\tilde q|^2 E_F`.
Physical units only appear here and in :mod:`fermi_blockade.optics` /
:mod:`fermi_blockade.profile`.

Each of the ten spin components is an independent, identical Fermi sea;
quantities here are per spin component.

"""
from typing import Tuple
import math
import logging

from pydantic import validator, root_validator
from scipy import constants, optimize

from .errors import DomainError
from .models import BaseModel
from .schemas import Confinement
from .specfun import fd_integral


logger = logging.getLogger(__name__)

HBAR = constants.hbar
K_B = constants.k
# m(87Sr) = 86.9088 u, CODATA atomic mass unit
SR87_MASS = 86.9088 * constants.atomic_mass

T_OVER_TF_FLOOR = 0.01
T_OVER_TF_MAX = 100.0
UNIFORM_T_OVER_TF_MIN = 1e-4
WEAK_CONFINEMENT_RATIO = 0.05
CONSISTENCY_RTOL = 1e-8
_UNIFORM_PREFACTOR = 4.0 / (3.0 * math.sqrt(math.pi))
# exp overflows beyond this; the fugacity is then stored as inf
MAX_LOG_FUGACITY = 709.0
# below this the fugacity expansion to first order is exact in double precision
CLASSICAL_BETA_MU = -40.0


def _positive(name: str, value: float) -> float:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and > 0, got {value}")
    return value


class TrapGeometry(BaseModel):
    """Harmonic trap, angular frequencies in rad/s."""
    omega_x: float
    omega_y: float
    omega_z: float

    @validator("omega_x", "omega_y", "omega_z")
    def check_positive(cls, v, field):
        return _positive(field.name, v)

    @property
    def omega_bar(self) -> float:
        return (self.omega_x * self.omega_y * self.omega_z) ** (1.0 / 3.0)

    @property
    def omegas(self) -> Tuple[float, float, float]:
        return (self.omega_x, self.omega_y, self.omega_z)

    @classmethod
    def from_hz(cls, fx: float, fy: float, fz: float) -> "TrapGeometry":
        return cls(omega_x=2 * math.pi * fx, omega_y=2 * math.pi * fy,
                   omega_z=2 * math.pi * fz)


class SpeciesParams(BaseModel):
    """Atomic species and imaging transition.

    Attributes:
        mass: kg
        wavelength: transition wavelength, m
        linewidth: natural linewidth Γ, rad/s
        i_sat: resonant saturation intensity, W/m²

    """
    mass: float
    wavelength: float
    linewidth: float
    i_sat: float

    @validator("mass", "wavelength", "linewidth", "i_sat")
    def check_positive(cls, v, field):
        return _positive(field.name, v)

    @property
    def natural_lifetime(self) -> float:
        """Excited-state lifetime 1/Γ in s."""
        return 1.0 / self.linewidth


SR87 = SpeciesParams(mass=SR87_MASS, wavelength=461e-9,
                     linewidth=2 * math.pi * 30.4e6, i_sat=410.0)
EXPERIMENT_TRAP = TrapGeometry.from_hz(120.0, 120.0, 506.0)
EXPERIMENT_N_PER_SPIN = 18000
EXPERIMENT_N_SPINS = 10


class GasScales(BaseModel):
    """Energy, momentum and length scales of one spin component."""
    fermi_energy_j: float
    fermi_energy_nk: float
    fermi_temperature_k: float
    fermi_wavevector: float
    recoil_energy_j: float
    recoil_energy_nk: float
    recoil_wavevector: float
    ratio_kf_kr: float
    ef_over_er: float
    hbar_omega_bar_j: float
    fermi_radii: Tuple[float, float, float]
    mass: float
    weak_confinement: bool


class GasState(BaseModel):
    """Dimensionless thermodynamic state of one spin component.

    The triple (T/T_F, βμ, ζ) must satisfy the equation of state of its
    confinement: ``f_3(βμ) = 1/(6 (T/T_F)^3)`` in a harmonic trap and
    ``f_{3/2}(βμ) = 4/(3√π) (T/T_F)^{-3/2}`` for a uniform gas.

    """
    t_over_tf: float
    beta_mu: float
    fugacity: float
    confinement: Confinement = Confinement.harmonic

    @root_validator(skip_on_failure=True)
    def check_consistency(cls, values):
        t, beta_mu, zeta = values["t_over_tf"], values["beta_mu"], values["fugacity"]
        _positive("t_over_tf", t)
        if not math.isfinite(beta_mu):
            raise ValueError(f"beta_mu must be finite, got {beta_mu}")
        overflowed = math.isinf(zeta) and beta_mu > MAX_LOG_FUGACITY
        if not overflowed and (not zeta > 0 or abs(math.log(zeta) - beta_mu)
                               > CONSISTENCY_RTOL * max(1.0, abs(beta_mu))):
            raise ValueError(f"fugacity {zeta} does not match beta_mu {beta_mu}")
        order, target = _equation_of_state(values["confinement"], t)
        lhs = fd_integral(order, beta_mu)
        if abs(lhs - target) > CONSISTENCY_RTOL * target:
            raise ValueError(f"State (T/T_F={t}, beta_mu={beta_mu}) violates the "
                             f"{values['confinement'].value} equation of state: "
                             f"f_{order}={lhs} != {target}")
        return values

    @property
    def mu_over_ef(self) -> float:
        """Chemical potential in units of the Fermi energy."""
        return self.t_over_tf * self.beta_mu


def fugacity(beta_mu: float) -> float:
    """ζ = e^{βμ}, inf once it no longer fits a double."""
    if beta_mu > MAX_LOG_FUGACITY:
        return math.inf
    return math.exp(beta_mu)


def _equation_of_state(confinement: Confinement, t_over_tf: float) -> Tuple[float, float]:
    if Confinement(confinement) == Confinement.uniform:
        return 1.5, _UNIFORM_PREFACTOR * t_over_tf ** -1.5
    return 3.0, 1.0 / (6.0 * t_over_tf ** 3)


def derive_scales(trap: TrapGeometry, n_per_spin: int, species: SpeciesParams) -> GasScales:
    """Derive Fermi and recoil scales of a trapped spin component.

    Args:
        trap: The trap geometry
        n_per_spin: Atom number of one spin component
        species: Atomic species

    Returns:
        The :class:`GasScales`, with ``weak_confinement`` set when
        :math:`\\hbar\\bar\\omega / E_R` is below 0.05

    """
    if not (n_per_spin >= 1 and math.isfinite(n_per_spin)):
        raise DomainError(f"n_per_spin must be >= 1, got {n_per_spin}")
    m = species.mass
    hbar_omega = HBAR * trap.omega_bar
    e_f = (6.0 * n_per_spin) ** (1.0 / 3.0) * hbar_omega
    k_f = math.sqrt(2.0 * m * e_f) / HBAR
    k_r = 2.0 * math.pi / species.wavelength
    e_r = (HBAR * k_r) ** 2 / (2.0 * m)
    radii = tuple(math.sqrt(2.0 * e_f / (m * w ** 2)) for w in trap.omegas)
    weak = hbar_omega / e_r < WEAK_CONFINEMENT_RATIO
    if not weak:
        logger.warning(f"Confinement is not weak: hbar*omega_bar/E_R = {hbar_omega / e_r:.3g}")
    return GasScales(fermi_energy_j=e_f,
                     fermi_energy_nk=e_f / K_B * 1e9,
                     fermi_temperature_k=e_f / K_B,
                     fermi_wavevector=k_f,
                     recoil_energy_j=e_r,
                     recoil_energy_nk=e_r / K_B * 1e9,
                     recoil_wavevector=k_r,
                     ratio_kf_kr=k_f / k_r,
                     ef_over_er=e_f / e_r,
                     hbar_omega_bar_j=hbar_omega,
                     fermi_radii=radii,
                     mass=m,
                     weak_confinement=weak)


def _solve_beta_mu(order: float, target: float, lo: float, hi: float) -> float:
    log_target = math.log(target)

    def residual(x):
        return math.log(fd_integral(order, x)) - log_target
    beta_mu, info = optimize.brentq(residual, lo, hi, xtol=1e-13, rtol=1e-15,
                                    maxiter=200, full_output=True)
    logger.debug(f"beta_mu={beta_mu:.12g} after {info.iterations} iterations")
    return beta_mu


def solve_fugacity(t_over_tf: float) -> GasState:
    """Solve :math:`f_3(\\beta\\mu) = 1/(6 (T/T_F)^3)` for a harmonically trapped gas.

    An exact zero temperature is mapped to the floor T/T_F = 0.01.

    Args:
        t_over_tf: T/T_F in [0.01, 100]

    Returns:
        A self-consistent :class:`GasState`

    """
    t_over_tf = float(t_over_tf)
    if t_over_tf == 0.0:
        logger.warning(f"T/T_F = 0 mapped to the floor {T_OVER_TF_FLOOR}")
        t_over_tf = T_OVER_TF_FLOOR
    if not (T_OVER_TF_FLOOR <= t_over_tf <= T_OVER_TF_MAX):
        raise DomainError(f"T/T_F must lie in [{T_OVER_TF_FLOOR}, {T_OVER_TF_MAX}], got {t_over_tf}")
    beta_mu = _solve_beta_mu(3.0, 1.0 / (6.0 * t_over_tf ** 3), -40.0, 150.0)
    return GasState(t_over_tf=t_over_tf, beta_mu=beta_mu, fugacity=fugacity(beta_mu))


def solve_fugacity_uniform(t_over_tf: float) -> GasState:
    """Solve the homogeneous-gas equation of state for βμ.

    Args:
        t_over_tf: T/T_F of the local Fermi energy, in [1e-4, 100]

    """
    t_over_tf = float(t_over_tf)
    if not (UNIFORM_T_OVER_TF_MIN <= t_over_tf <= T_OVER_TF_MAX):
        raise DomainError(f"T/T_F must lie in [{UNIFORM_T_OVER_TF_MIN}, {T_OVER_TF_MAX}], "
                          f"got {t_over_tf}")
    beta_mu = _solve_beta_mu(1.5, _UNIFORM_PREFACTOR * t_over_tf ** -1.5, -40.0, 2e4)
    return GasState(t_over_tf=t_over_tf, beta_mu=beta_mu, fugacity=fugacity(beta_mu),
                    confinement=Confinement.uniform)


def t_over_tf_from_mu(beta_mu: float,
                      confinement: Confinement = Confinement.harmonic) -> float:
    """Inverse of :func:`solve_fugacity` (or :func:`solve_fugacity_uniform`).

    Harmonic: :math:`T/T_F = (6 f_3(\\beta\\mu))^{-1/3}`; uniform:
    :math:`T/T_F = (3\\sqrt{\\pi} f_{3/2}(\\beta\\mu)/4)^{-2/3}`. The uniform branch gives
    the local T/T_F of a trapped gas at a point where the local reduced
    chemical potential is `beta_mu`.

    """
    beta_mu = float(beta_mu)
    if not math.isfinite(beta_mu):
        raise DomainError(f"beta_mu must be finite, got {beta_mu}")
    if Confinement(confinement) == Confinement.uniform:
        return (fd_integral(1.5, beta_mu) / _UNIFORM_PREFACTOR) ** (-2.0 / 3.0)
    return (6.0 * fd_integral(3.0, beta_mu)) ** (-1.0 / 3.0)
