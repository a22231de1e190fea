"""Relative scattering rate of a Fermi sea.

The rate of spontaneous scattering with momentum transfer :math:`\\hbar k`,
relative to an unblocked sample, is

.. math::

    S(k) = 1 - \\frac{\\int n(y)\\, n(y + k\\hat e)\\, d^D y}{\\int n(y)\\, d^D y}

where :math:`n` is the Fermi-Dirac occupation of the reduced phase-space point
`y`. In a harmonic trap the rescaled coordinates :math:`(\\tilde q, p)` make the
occupation a function of :math:`|y|^2 = |\\tilde q|^2 + |p|^2` only (D = 6);
the homogeneous gas has D = 3 and a line-of-sight column D = 4. Initial
states are weighted by :math:`n` alone and the intermediate, post-absorption
state is not blocked.

Four evaluations are provided:

- :func:`suppression_trapped`: nested adaptive quadrature over the
  coordinate along the transfer and the radius of the remaining D - 1
  coordinates.
- :func:`suppression_homogeneous`: the same kernel at D = 3.
- :func:`suppression_mc`: rejection-sampled phase space.
- :func:`suppression_series`: fugacity expansion, every term a Gaussian
  integral.

"""
from typing import List, Optional, Tuple, Union
import math
import logging

import numpy as np
from pydantic import validator, root_validator
from scipy import integrate, optimize, special

from .errors import DomainError, EfficiencyError, EnvelopeError, NumericalError
from .gas import CLASSICAL_BETA_MU, GasState, t_over_tf_from_mu
from .models import BaseModel
from .schemas import Confinement, Method
from .specfun import adaptive_quad, fd_integral, fd_series
from .util import parallel_map


logger = logging.getLogger(__name__)

# ln(1e12): phase space beyond E = T (max(βμ, 0) + LOG_CUTOFF) holds occupations < 1e-12
LOG_CUTOFF = math.log(1e12)
ABS_TOL = 1e-9
EPSREL = 1e-9
SERIES_MAX_FUGACITY = 0.95
SERIES_DEFAULT_TERMS = 2000
MC_MIN_SAMPLES = 10_000
MC_MIN_ACCEPTANCE = 1e-3
MC_BATCH = 1 << 16
MC_DEFAULT_SAMPLES = 10 ** 6
# relative slack on the envelope constant, absorbs roundoff in the optimum
ENVELOPE_SLACK = 1e-9


class PhasePoint(BaseModel):
    """Reduced momentum `p` (units of ħk_F) and trap-rescaled position `q`."""
    p: Tuple[float, float, float]
    q: Tuple[float, float, float]

    @validator("p", "q")
    def check_finite(cls, v, field):
        if not all(math.isfinite(x) for x in v):
            raise ValueError(f"{field.name} must be finite, got {v}")
        return v

    @property
    def energy(self) -> float:
        """Single-particle energy in units of E_F."""
        return sum(x * x for x in self.p) + sum(x * x for x in self.q)


class SuppressionResult(BaseModel):
    """Value of S(k) and how it was obtained.

    Attributes:
        s_value: The relative scattering rate
        method: The evaluation method
        std_error: Standard error, nonzero for Monte Carlo only
        samples_or_evals: Accepted samples, integrand evaluations or series terms
        truncation_error: First omitted term of the fugacity series
        k_over_kf: Momentum transfer in units of k_F
        t_over_tf: Temperature of the state
        envelope_t_over_tf: Temperature of the Monte Carlo proposal envelope
        acceptance: Monte Carlo acceptance ratio

    """
    s_value: float
    method: Method
    std_error: float = 0.0
    samples_or_evals: int
    truncation_error: float = 0.0
    k_over_kf: float
    t_over_tf: float
    envelope_t_over_tf: Optional[float] = None
    acceptance: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def check_bounds(cls, values):
        s, err = values["s_value"], values["std_error"]
        if not (math.isfinite(s) and 0.0 <= s <= 1.0 + 3.0 * err):
            raise ValueError(f"S = {s} outside [0, 1 + 3 sigma] (sigma = {err})")
        return values


def occupation(state: GasState,
               reduced_energy: Union[float, np.ndarray, PhasePoint]) -> Union[float, np.ndarray]:
    """Fermi-Dirac occupation at `reduced_energy` (units of E_F).

    :math:`n = 1/(1 + \\zeta^{-1} e^{\\epsilon/k_B T})`, exactly 1/2 at
    ``state.mu_over_ef``.

    """
    if isinstance(reduced_energy, PhasePoint):
        reduced_energy = reduced_energy.energy
    value = special.expit((state.mu_over_ef - np.asarray(reduced_energy, dtype=float))
                          / state.t_over_tf)
    if np.ndim(value) == 0:
        return float(value)
    return value


def _fermi(energy: float, t_over_tf: float, beta_mu: float) -> float:
    x = energy / t_over_tf - beta_mu
    if x > 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / special.gamma(n / 2.0)


def kernel_norm(t_over_tf: float, beta_mu: float, dims: int) -> float:
    """:math:`\\int n(y) d^D y = (\\pi T/T_F)^{D/2} f_{D/2}(\\beta\\mu)`."""
    return (math.pi * t_over_tf) ** (dims / 2.0) * fd_integral(dims / 2.0, beta_mu)


def check_dims(dims: int) -> int:
    if int(dims) != dims or dims < 3:
        raise DomainError(f"Kernel dimension must be an integer >= 3, got {dims}")
    return int(dims)


def check_transfer(k_over_kf: float) -> float:
    k_over_kf = float(k_over_kf)
    if not (math.isfinite(k_over_kf) and k_over_kf >= 0.0):
        raise DomainError(f"k/k_F must be finite and >= 0, got {k_over_kf}")
    return k_over_kf


def _overlap_quad(k: float, t_over_tf: float, beta_mu: float, dims: int,
                  cutoff: float) -> Tuple[float, int]:
    if beta_mu < CLASSICAL_BETA_MU:
        # leading fugacity term; the next one is smaller by a factor ζ < 5e-18
        return 2.0 ** (-dims / 2.0) * math.exp(beta_mu - k * k / (2.0 * t_over_tf)), 0
    mu = t_over_tf * beta_mu
    e_max = t_over_tf * (max(beta_mu, 0.0) + cutoff)
    half = 0.5 * k
    p_max = math.sqrt(e_max) - half
    if p_max <= 0.0:
        return 0.0, 0
    norm = kernel_norm(t_over_tf, beta_mu, dims)
    power = 0.5 * (dims - 3)
    # w^{D-2} dw = u^{(D-3)/2} du / 2 with u = w², and the p -> -p symmetry doubles
    prefactor = _sphere_area(dims - 1)
    epsabs = ABS_TOL * norm / prefactor
    evals = [0]

    def inner(p):
        a = (p - half) ** 2
        b = (p + half) ** 2
        u_max = e_max - b
        if u_max <= 0.0:
            return 0.0

        def integrand(u):
            evals[0] += 1
            return u ** power * _fermi(a + u, t_over_tf, beta_mu) * _fermi(b + u, t_over_tf, beta_mu)
        value, _ = adaptive_quad(integrand, 0.0, u_max, epsabs=epsabs / p_max, epsrel=EPSREL,
                                 points=(mu - a, mu - b))
        return value

    points = None
    if mu > 0.0:
        root = math.sqrt(mu)
        points = (root - half, root + half, half - root)
    value, _ = adaptive_quad(inner, 0.0, p_max, epsabs=epsabs, epsrel=EPSREL, points=points)
    ratio = prefactor * value / norm
    if ratio > 1.0 + 1e-6:
        raise NumericalError(f"Overlap ratio {ratio} exceeds 1",
                             {"k": k, "t_over_tf": t_over_tf, "beta_mu": beta_mu, "dims": dims})
    return min(ratio, 1.0), evals[0]


def overlap_ratio(k_over_kf: float, t_over_tf: float, beta_mu: float, dims: int = 6,
                  cutoff: float = LOG_CUTOFF) -> float:
    """Blocked fraction :math:`1 - S` of an isotropic occupation in `dims` dimensions.

    The occupation is :math:`n(|y|^2)` with :math:`|y|^2` in units of E_F; the
    transfer `k_over_kf` shifts one momentum coordinate. D = 3 is the
    homogeneous gas, D = 4 a column along one trap axis (local chemical
    potential `beta_mu`), D = 6 the harmonically trapped gas.

    The integral is reduced to the coordinate :math:`p` along the transfer,
    shifted by k/2 so that the integrand is even in it, and the radius `w` of
    the other D - 1 coordinates:

    .. math::

        \\int n n' d^D y = |S^{D-2}| \\int_0^\\infty dp \\int_0^\\infty du\\,
            u^{(D-3)/2} n((p - k/2)^2 + u) n((p + k/2)^2 + u)

    with :math:`u = w^2`. Both integrations carry break points at the Fermi
    surface.

    Args:
        k_over_kf: Momentum transfer in units of k_F
        t_over_tf: T/T_F
        beta_mu: Reduced chemical potential
        dims: Number of isotropic reduced dimensions
        cutoff: Phase space is truncated at :math:`E = T (\\max(\\beta\\mu, 0) + cutoff)`

    """
    k_over_kf = check_transfer(k_over_kf)
    dims = check_dims(dims)
    if not (t_over_tf > 0 and math.isfinite(t_over_tf)):
        raise DomainError(f"T/T_F must be finite and > 0, got {t_over_tf}")
    return _overlap_quad(k_over_kf, t_over_tf, beta_mu, dims, cutoff)[0]


def _quadrature_result(ratio: float, evals: int, method: Method,
                       k_over_kf: float, state: GasState) -> SuppressionResult:
    return SuppressionResult(s_value=min(max(1.0 - ratio, 0.0), 1.0), method=method,
                             samples_or_evals=evals, k_over_kf=k_over_kf,
                             t_over_tf=state.t_over_tf)


def _require_harmonic(state: GasState) -> None:
    if state.confinement != Confinement.harmonic:
        raise DomainError(f"The trapped kernel needs a harmonic state, got {state.confinement.value}")


def suppression_trapped(k_over_kf: float, state: GasState,
                        cutoff: float = LOG_CUTOFF) -> SuppressionResult:
    """S(k) of the harmonically trapped gas by nested adaptive quadrature.

    Args:
        k_over_kf: Momentum transfer in units of k_F
        state: A harmonic :class:`GasState`
        cutoff: Phase-space cutoff, see :func:`overlap_ratio`

    Returns:
        A :class:`SuppressionResult` with the number of integrand evaluations

    """
    k_over_kf = check_transfer(k_over_kf)
    _require_harmonic(state)
    ratio, evals = _overlap_quad(k_over_kf, state.t_over_tf, state.beta_mu, 6, cutoff)
    logger.debug(f"S({k_over_kf:.4g}) at T/T_F={state.t_over_tf:.4g}: {1 - ratio:.9g}, {evals} evals")
    return _quadrature_result(ratio, evals, Method.quadrature, k_over_kf, state)


def suppression_trapped_spatial(k_over_kf: float, state: GasState,
                                epsrel: float = 1e-8) -> SuppressionResult:
    """S(k) of the trapped gas integrated over (|q̃|, p_∥, p_⊥).

    Independent of :func:`suppression_trapped`: spatial radius and the two
    cylindrical momentum coordinates about the transfer are integrated with
    :func:`scipy.integrate.tplquad`. Slow in the degenerate regime.

    """
    k_over_kf = check_transfer(k_over_kf)
    _require_harmonic(state)
    t, beta_mu = state.t_over_tf, state.beta_mu
    e_max = t * (max(beta_mu, 0.0) + LOG_CUTOFF)
    half = 0.5 * k_over_kf
    r_max = math.sqrt(e_max)
    if r_max <= half:
        return _quadrature_result(0.0, 0, Method.quadrature, k_over_kf, state)
    evals = [0]

    def integrand(p_perp, p_par, r):
        evals[0] += 1
        base = r * r + p_perp * p_perp
        return (r * r * p_perp * _fermi(base + (p_par - half) ** 2, t, beta_mu)
                * _fermi(base + (p_par + half) ** 2, t, beta_mu))

    def p_par_max(r):
        return max(math.sqrt(max(e_max - r * r, 0.0)) - half, 0.0)

    def p_perp_max(r, p_par):
        return math.sqrt(max(e_max - r * r - (p_par + half) ** 2, 0.0))
    value, error = integrate.tplquad(integrand, 0.0, r_max, 0.0, p_par_max, 0.0, p_perp_max,
                                     epsabs=0.0, epsrel=epsrel)
    # 4π r² dr, 2π p_⊥ dp_⊥ and the p_∥ symmetry
    overlap = 16.0 * math.pi ** 2 * value
    ratio = overlap / kernel_norm(t, beta_mu, 6)
    logger.debug(f"Spatial reduction: ratio {ratio:.9g} +- {error:.2e}, {evals[0]} evals")
    return _quadrature_result(min(ratio, 1.0), evals[0], Method.quadrature, k_over_kf, state)


def suppression_homogeneous(k_over_kf_local: float, state: GasState,
                            cutoff: float = LOG_CUTOFF) -> SuppressionResult:
    """S(k) of a homogeneous gas.

    A uniform `state` is used as is. For a harmonic `state` the gas at the
    trap center is taken: same temperature and chemical potential, with T/T_F
    and k_F replaced by their local values, so that `k_over_kf_local` is in
    units of the central Fermi wavevector.

    """
    k_over_kf_local = check_transfer(k_over_kf_local)
    if state.confinement == Confinement.uniform:
        t_local = state.t_over_tf
    else:
        t_local = t_over_tf_from_mu(state.beta_mu, Confinement.uniform)
    ratio, evals = _overlap_quad(k_over_kf_local, t_local, state.beta_mu, 3, cutoff)
    return _quadrature_result(ratio, evals, Method.homogeneous, k_over_kf_local, state)


def _kernel_dims(state: GasState) -> int:
    return 3 if state.confinement == Confinement.uniform else 6


def suppression_series(k_over_kf: float, state: GasState,
                       max_terms: int = SERIES_DEFAULT_TERMS) -> SuppressionResult:
    """S(k) from the fugacity expansion of both occupations.

    With :math:`n = \\sum_j (-1)^{j+1} \\zeta^j e^{-j|y|^2/T}` every product
    of terms is a Gaussian integral and

    .. math::

        1 - S = \\frac{1}{f_{D/2}(\\beta\\mu)} \\sum_{m \\ge 2} (-1)^m \\zeta^m m^{-D/2}
                \\sum_{j=1}^{m-1} e^{-j (m - j) k^2 / (m T)}

    The denominator uses the fugacity series as well. Only valid for
    :math:`\\zeta \\le 0.95`.

    Args:
        k_over_kf: Momentum transfer in units of k_F
        state: Harmonic or uniform state
        max_terms: Number of terms `m` kept

    """
    k_over_kf = check_transfer(k_over_kf)
    if max_terms < 1:
        raise DomainError(f"max_terms must be >= 1, got {max_terms}")
    if state.fugacity > SERIES_MAX_FUGACITY:
        raise DomainError(f"Fugacity series needs zeta <= {SERIES_MAX_FUGACITY}, "
                          f"got {state.fugacity:.6g} at T/T_F={state.t_over_tf}")
    dims = _kernel_dims(state)
    half_d = dims / 2.0
    zeta, t = state.fugacity, state.t_over_tf
    k2 = k_over_kf * k_over_kf

    def term(m: int) -> float:
        j = np.arange(1, m, dtype=float)
        gauss = np.exp(-j * (m - j) * k2 / (m * t)).sum()
        return (-1) ** m * zeta ** m * m ** -half_d * float(gauss)
    total = 0.0
    used = 0
    for m in range(2, max_terms + 2):
        value = term(m)
        total += value
        used += 1
        if value == 0.0 or abs(value) < 1e-18 * abs(total):
            break
    denominator = fd_series(half_d, state.beta_mu, n_terms=max_terms + 1)
    truncation = abs(term(used + 2)) / denominator
    ratio = total / denominator
    return SuppressionResult(s_value=min(max(1.0 - ratio, 0.0), 1.0), method=Method.series,
                             samples_or_evals=used, truncation_error=truncation,
                             k_over_kf=k_over_kf, t_over_tf=t)


class PhaseSpaceSample(BaseModel):
    """Phase-space points drawn from the normalized occupation.

    `points` has one row per sample; the last three columns are the momentum,
    the leading ones (three for a trapped gas) the rescaled position.

    """
    points: np.ndarray
    t_envelope: float
    acceptance: float
    proposals: int

    @property
    def positions(self) -> np.ndarray:
        return self.points[:, :-3]

    @property
    def momenta(self) -> np.ndarray:
        return self.points[:, -3:]

    @property
    def energies(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.points, self.points)


def _log_envelope_constant(t_env: float, t_over_tf: float, beta_mu: float) -> float:
    """Smallest log c with :math:`c e^{-E/T_e} \\ge n(E)` for all E >= 0."""
    # the ratio n(E) e^{E/T_e} peaks where 1 - n = T/T_e
    e_star = max(0.0, t_over_tf * (beta_mu + math.log(t_over_tf / (t_env - t_over_tf))))
    return math.log(_fermi(e_star, t_over_tf, beta_mu)) + e_star / t_env


def fit_envelope(state: GasState, dims: int) -> Tuple[float, float, float]:
    """Gaussian envelope :math:`c e^{-|y|^2/T_e}` with the highest acceptance.

    Returns:
        The envelope temperature, log c and the expected acceptance ratio

    """
    t, beta_mu = state.t_over_tf, state.beta_mu
    log_norm = math.log(fd_integral(dims / 2.0, beta_mu))

    def log_inverse_acceptance(x):
        t_env = t * (1.0 + math.exp(x))
        return _log_envelope_constant(t_env, t, beta_mu) + 0.5 * dims * math.log(t_env / t)
    opt = optimize.minimize_scalar(log_inverse_acceptance, bounds=(-12.0, 8.0), method="bounded",
                                   options={"xatol": 1e-6})
    t_env = t * (1.0 + math.exp(opt.x))
    log_c = _log_envelope_constant(t_env, t, beta_mu) + math.log1p(ENVELOPE_SLACK)
    acceptance = math.exp(log_norm - log_c - 0.5 * dims * math.log(t_env / t))
    return t_env, log_c, acceptance


def _sample_batch(n_accept: int, seed: np.random.SeedSequence, dims: int,
                  t_over_tf: float, beta_mu: float, t_env: float, log_c: float,
                  acceptance: float) -> Tuple[np.ndarray, int]:
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(0.5 * t_env)
    chunks: List[np.ndarray] = []
    have = 0
    proposed = 0
    while have < n_accept:
        n_prop = max(1024, int(1.2 * (n_accept - have) / acceptance) + 1)
        y = rng.normal(0.0, sigma, size=(n_prop, dims))
        energy = np.einsum("ij,ij->i", y, y)
        ratio = special.expit(beta_mu - energy / t_over_tf) * np.exp(energy / t_env - log_c)
        worst = float(ratio.max())
        if worst > 1.0:
            raise EnvelopeError(f"Envelope at T_e={t_env:.6g} does not dominate the "
                                f"occupation: ratio {worst:.12g}")
        keep = y[rng.random(n_prop) < ratio]
        chunks.append(keep)
        have += len(keep)
        proposed += n_prop
    return np.concatenate(chunks)[:n_accept], proposed


def sample_phase_space(state: GasState, n_samples: int, seed: int) -> PhaseSpaceSample:
    """Draw `n_samples` phase-space points distributed as the occupation.

    Rejection sampling against an isotropic Gaussian envelope whose
    temperature is chosen for the best acceptance. Samples are produced in
    fixed batches of :data:`MC_BATCH`, each with its own generator spawned
    from `seed`, so the stream does not depend on the number of workers.

    Raises:
        EfficiencyError: If the expected acceptance is below 1e-3
        EnvelopeError: If a proposal exceeds the envelope

    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    dims = _kernel_dims(state)
    t_env, log_c, acceptance = fit_envelope(state, dims)
    logger.debug(f"Envelope T_e/T_F={t_env:.6g}, expected acceptance {acceptance:.4g}")
    if acceptance < MC_MIN_ACCEPTANCE:
        raise EfficiencyError(f"Rejection acceptance {acceptance:.3g} below {MC_MIN_ACCEPTANCE}",
                              {"t_envelope": t_env, "acceptance": acceptance,
                               "t_over_tf": state.t_over_tf})
    n_batches = -(-n_samples // MC_BATCH)
    quotas = [MC_BATCH] * (n_batches - 1) + [n_samples - MC_BATCH * (n_batches - 1)]
    children = np.random.SeedSequence(seed).spawn(n_batches)

    def run(args):
        quota, child = args
        return _sample_batch(quota, child, dims, state.t_over_tf, state.beta_mu,
                             t_env, log_c, acceptance)
    batches = parallel_map(run, zip(quotas, children))
    points = np.concatenate([b[0] for b in batches])
    proposals = sum(b[1] for b in batches)
    return PhaseSpaceSample(points=points, t_envelope=t_env,
                            acceptance=n_samples / proposals, proposals=proposals)


def suppression_mc(k_over_kf: float, state: GasState, n_samples: int = MC_DEFAULT_SAMPLES,
                   seed: int = 0) -> SuppressionResult:
    """Monte Carlo estimate of S(k) = E[1 - n(y + k ê)] over the occupation.

    Args:
        k_over_kf: Momentum transfer in units of k_F
        state: Harmonic or uniform state
        n_samples: Accepted samples, at least 10⁴
        seed: Seed of the sample stream; equal seeds give identical results

    """
    k_over_kf = check_transfer(k_over_kf)
    if n_samples < MC_MIN_SAMPLES:
        raise DomainError(f"n_samples must be >= {MC_MIN_SAMPLES}, got {n_samples}")
    sample = sample_phase_space(state, n_samples, seed)
    p_axis = sample.momenta[:, 0]
    shifted = sample.energies + 2.0 * k_over_kf * p_axis + k_over_kf ** 2
    values = special.expit(shifted / state.t_over_tf - state.beta_mu)
    s_value = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n_samples))
    logger.debug(f"MC S({k_over_kf:.4g}) = {s_value:.6g} +- {std_error:.2g}, "
                 f"acceptance {sample.acceptance:.4g}")
    return SuppressionResult(s_value=s_value, method=Method.mc, std_error=std_error,
                             samples_or_evals=n_samples, k_over_kf=k_over_kf,
                             t_over_tf=state.t_over_tf, envelope_t_over_tf=sample.t_envelope,
                             acceptance=sample.acceptance)


def suppression(k_over_kf: float, state: GasState, method: Union[str, Method] = Method.quadrature,
                n_samples: int = MC_DEFAULT_SAMPLES, seed: int = 0,
                max_terms: int = SERIES_DEFAULT_TERMS) -> SuppressionResult:
    """Evaluate S(k) with `method`."""
    method = Method(method)
    if method == Method.quadrature:
        return suppression_trapped(k_over_kf, state)
    elif method == Method.homogeneous:
        return suppression_homogeneous(k_over_kf, state)
    elif method == Method.mc:
        return suppression_mc(k_over_kf, state, n_samples=n_samples, seed=seed)
    else:
        return suppression_series(k_over_kf, state, max_terms=max_terms)
