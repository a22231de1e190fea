"""Detector-facing observables.

Angles are measured between the drive beam and the scattered photon. The drive
propagates along the first momentum axis, which is also the quantization axis
of the dipole emission pattern.

"""
from typing import Dict, List, Optional, Sequence, Tuple
import math
import logging

import numpy as np
from pydantic import validator, root_validator
from scipy import interpolate, special

from .blockade import (SuppressionResult, kernel_norm,
                       sample_phase_space, suppression_trapped)
from .errors import DomainError, ResolutionError
from .gas import (T_OVER_TF_FLOOR, T_OVER_TF_MAX, GasState, SpeciesParams,
                  solve_fugacity)
from .models import BaseModel
from .schemas import Confinement, Method, SweepVariable, Table, Weighting
from .util import parallel_map


logger = logging.getLogger(__name__)

LIFETIME_NODES = 16
CONE_THETA_NODES = 6
CONE_PHI_NODES = 12
CONE_SPLINE_NODES = 9
PREPULSE_REFERENCE_DURATION = 5e-6
PREPULSE_MIN_ATOMS = 10_000
# independent atom samples; their spread gives the reported error
PREPULSE_BATCHES = 8
# mean scattering events per atom drawn at once
PREPULSE_EVENTS_PER_STEP = 4.0
# occupation excess over 1, in standard deviations of the cell count
RESOLUTION_SIGMAS = 5.0
# extra entropy word separating the kick stream from the sampler stream
KICK_STREAM = 0x6B69636B


class DetectionAxis(BaseModel):
    """A detector at off-axis angle `alpha` (degrees) collecting a cone of
    half-angle asin(NA)."""
    alpha: float
    numerical_aperture: float
    quantum_efficiency: float = 1.0
    label: Optional[str] = None

    @validator("alpha")
    def check_alpha(cls, v):
        if not 0.0 < v <= 180.0:
            raise ValueError(f"alpha must lie in (0, 180] degrees, got {v}")
        return v

    @validator("numerical_aperture")
    def check_na(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError(f"numerical_aperture must lie in (0, 1), got {v}")
        return v

    @validator("quantum_efficiency")
    def check_qe(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"quantum_efficiency must lie in [0, 1], got {v}")
        return v

    @validator("label", always=True)
    def default_label(cls, v, values):
        if v is None and "alpha" in values:
            return f"{values['alpha']:g}deg"
        return v

    @property
    def cone_half_angle(self) -> float:
        """Collection half-angle in degrees."""
        return math.degrees(math.asin(self.numerical_aperture))


EXPERIMENT_AXES = (DetectionAxis(alpha=24.0, numerical_aperture=0.23),
                   DetectionAxis(alpha=72.0, numerical_aperture=0.23))


class SweepSpec(BaseModel):
    """A theory curve along one variable for a set of detection axes.

    Attributes:
        variable: The swept variable
        fixed: Value of the other variable (k_F/k_R or T/T_F)
        grid: Strictly increasing sample points
        axes: Detection axes, one output column each
        relative_uncertainty_t: Relative uncertainty of T/T_F for the band
        relative_uncertainty_kf: Relative uncertainty of k_F/k_R for the band
        cone_average: Average S over the collection cone of each axis

    """
    variable: SweepVariable
    fixed: float
    grid: List[float]
    axes: List[DetectionAxis]
    relative_uncertainty_t: float = 0.0
    relative_uncertainty_kf: float = 0.0
    cone_average: bool = False

    @validator("relative_uncertainty_t", "relative_uncertainty_kf")
    def check_uncertainty(cls, v, field):
        if not 0.0 <= v < 1.0:
            raise ValueError(f"{field.name} must lie in [0, 1), got {v}")
        return v

    @validator("axes")
    def check_axes(cls, v):
        if not v:
            raise ValueError("At least one detection axis is required")
        labels = [x.label for x in v]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Axis labels must be unique, got {labels}")
        return v

    @root_validator(skip_on_failure=True)
    def check_grid(cls, values):
        grid, fixed = values["grid"], values["fixed"]
        if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"grid must be non-empty and strictly increasing, got {grid}")
        if values["variable"] == SweepVariable.t_over_tf:
            temperatures, ratios = grid, [fixed]
        else:
            temperatures, ratios = [fixed], grid
        if not all(T_OVER_TF_FLOOR <= t <= T_OVER_TF_MAX for t in temperatures):
            raise ValueError(f"T/T_F values must lie in [{T_OVER_TF_FLOOR}, {T_OVER_TF_MAX}]")
        if not all(r > 0 and math.isfinite(r) for r in ratios):
            raise ValueError("k_F/k_R values must be finite and > 0")
        return values

    @property
    def has_band(self) -> bool:
        return self.relative_uncertainty_t > 0 or self.relative_uncertainty_kf > 0


class LifetimeResult(BaseModel):
    mean_s: float
    multiplier: float
    weighting: Weighting
    n_nodes: int
    natural_lifetime: Optional[float] = None
    modified_lifetime: Optional[float] = None


def angle_to_k(alpha: float, kf_over_kr: float) -> float:
    """Momentum transfer :math:`k/k_F = 2 \\sin(\\alpha/2) / (k_F/k_R)`.

    Args:
        alpha: Scattering angle in degrees, in [0, 180]
        kf_over_kr: k_F/k_R

    """
    if not 0.0 <= alpha <= 180.0:
        raise DomainError(f"alpha must lie in [0, 180] degrees, got {alpha}")
    if not (kf_over_kr > 0 and math.isfinite(kf_over_kr)):
        raise DomainError(f"k_F/k_R must be finite and > 0, got {kf_over_kr}")
    return 2.0 * math.sin(math.radians(alpha) / 2.0) / kf_over_kr


def angular_map(state: GasState, kf_over_kr: float, n_alpha: int = 37) -> Table:
    """S on a uniform grid of scattering angles over [0°, 180°].

    Rotating the table about the drive axis gives the angular distribution
    of scattered photons.

    """
    if n_alpha < 2:
        raise DomainError(f"n_alpha must be >= 2, got {n_alpha}")
    alphas = np.linspace(0.0, 180.0, n_alpha)
    ks = [angle_to_k(a, kf_over_kr) for a in alphas]
    results = parallel_map(lambda k: suppression_trapped(k, state), ks)
    return Table(columns=["alpha_deg", "k_over_kf", "s"],
                 rows=[[float(a), k, r.s_value] for a, k, r in zip(alphas, ks, results)],
                 units={"alpha_deg": "deg"})


def _transfer_interpolant(state: GasState, k_lo: float, k_hi: float,
                          n_nodes: int = CONE_SPLINE_NODES) -> interpolate.CubicSpline:
    nodes = k_lo + (k_hi - k_lo) * 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, n_nodes)))
    values = parallel_map(lambda k: suppression_trapped(k, state).s_value, nodes)
    return interpolate.CubicSpline(nodes, values)


def axis_suppression(axis: DetectionAxis, state: GasState, kf_over_kr: float,
                     cone_average: bool = False) -> SuppressionResult:
    """S seen by a detector.

    By default S is evaluated at the central angle of the axis. With
    `cone_average` it is averaged uniformly in solid angle over the collection
    cone; S is then interpolated in k between kernel evaluations spanning the
    range of transfers inside the cone.

    """
    k_center = angle_to_k(axis.alpha, kf_over_kr)
    if not cone_average:
        return suppression_trapped(k_center, state)
    alpha = math.radians(axis.alpha)
    theta_c = math.asin(axis.numerical_aperture)
    k_lo = angle_to_k(math.degrees(max(alpha - theta_c, 0.0)), kf_over_kr)
    k_hi = angle_to_k(math.degrees(min(alpha + theta_c, math.pi)), kf_over_kr)
    spline = _transfer_interpolant(state, k_lo, k_hi)
    x, w = np.polynomial.legendre.leggauss(CONE_THETA_NODES)
    cos_lo = math.cos(theta_c)
    cos_theta = cos_lo + (1.0 - cos_lo) * 0.5 * (x + 1.0)
    sin_theta = np.sqrt(1.0 - cos_theta ** 2)
    phi = 2.0 * math.pi * np.arange(CONE_PHI_NODES) / CONE_PHI_NODES
    cos_gamma = (math.cos(alpha) * cos_theta[:, None]
                 + math.sin(alpha) * sin_theta[:, None] * np.cos(phi)[None, :])
    k = np.sqrt(np.clip(2.0 * (1.0 - cos_gamma), 0.0, 4.0)) / kf_over_kr
    s = spline(np.clip(k, k_lo, k_hi))
    mean = float(np.sum(w[:, None] * s) / (np.sum(w) * CONE_PHI_NODES))
    return SuppressionResult(s_value=min(max(mean, 0.0), 1.0), method=Method.quadrature,
                             samples_or_evals=CONE_SPLINE_NODES, k_over_kf=k_center,
                             t_over_tf=state.t_over_tf)


def lifetime_factor(state: GasState, kf_over_kr: float,
                    weighting: Weighting = Weighting.isotropic,
                    species: Optional[SpeciesParams] = None,
                    n_nodes: int = LIFETIME_NODES) -> LifetimeResult:
    """Emission-averaged S and the resulting lifetime multiplier 1/<S>.

    With :math:`r = k_F/k_R` the transfer is :math:`k = (2/r)\\sin(\\alpha/2)` and
    :math:`\\sin\\alpha\\, d\\alpha = r^2 k\\, dk`, so

    .. math::

        \\langle S \\rangle = \\frac{r^2}{2} \\int_0^{2/r} S(k) k\\, dk

    for isotropic emission. The circular-dipole pattern about the drive axis
    weights by :math:`\\frac{3}{4}(1 + \\cos^2\\alpha)` with
    :math:`\\cos\\alpha = 1 - r^2 k^2/2`. The k integral is Gauss-Legendre.

    Args:
        state: Harmonic state
        kf_over_kr: k_F/k_R
        weighting: Emission pattern
        species: If given, the natural and modified lifetimes are reported
        n_nodes: Quadrature nodes in k

    """
    weighting = Weighting(weighting)
    k_max = angle_to_k(180.0, kf_over_kr)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    k = 0.5 * k_max * (x + 1.0)
    dk = 0.5 * k_max * w
    s = np.array([r.s_value for r in parallel_map(lambda q: suppression_trapped(q, state), k)])
    r2 = kf_over_kr ** 2
    if weighting == Weighting.isotropic:
        pattern = 0.5 * np.ones_like(k)
    else:
        pattern = 0.375 * (1.0 + (1.0 - 0.5 * r2 * k ** 2) ** 2)
    mean_s = float(np.sum(pattern * s * r2 * k * dk))
    multiplier = 1.0 / mean_s
    natural = species.natural_lifetime if species is not None else None
    modified = natural * multiplier if natural is not None else None
    logger.debug(f"<S> = {mean_s:.6g} ({weighting.value}), lifetime x {multiplier:.6g}")
    return LifetimeResult(mean_s=mean_s, multiplier=multiplier, weighting=weighting,
                          n_nodes=n_nodes, natural_lifetime=natural, modified_lifetime=modified)


def _band_corners(t: float, r: float, spec: SweepSpec) -> List[Tuple[float, float]]:
    dt, dr = spec.relative_uncertainty_t, spec.relative_uncertainty_kf
    return [(t * (1 + a * dt), r * (1 + b * dr)) for a in (-1, 1) for b in (-1, 1)]


def sweep(spec: SweepSpec) -> Table:
    """Theory curves S(variable) for each detection axis of `spec`.

    Columns are the swept variable and one ``s_<label>`` column per axis.
    With a nonzero relative uncertainty the columns ``s_<label>_lo`` and
    ``s_<label>_hi`` hold the extremes of S over the four corners of the
    uncertainty rectangle in (T/T_F, k_F/k_R).

    """
    points = []
    for value in spec.grid:
        if spec.variable == SweepVariable.t_over_tf:
            points.append((value, spec.fixed))
        else:
            points.append((spec.fixed, value))
    jobs = []
    for t, r in points:
        corners = [(t, r)] + (_band_corners(t, r, spec) if spec.has_band else [])
        for axis in spec.axes:
            for corner in corners:
                jobs.append((axis, corner))
    states: Dict[float, GasState] = {}
    for _, (t, _) in jobs:
        if t not in states:
            states[t] = solve_fugacity(min(max(t, T_OVER_TF_FLOOR), T_OVER_TF_MAX))

    def evaluate(job):
        axis, (t, r) = job
        return axis_suppression(axis, states[t], r, spec.cone_average).s_value
    values = iter(parallel_map(evaluate, jobs))
    columns = [spec.variable.value] + [f"s_{a.label}" for a in spec.axes]
    if spec.has_band:
        columns += [f"s_{a.label}_{x}" for a in spec.axes for x in ("lo", "hi")]
    rows = []
    for value in spec.grid:
        central, band = [], []
        for _ in spec.axes:
            s = next(values)
            central.append(s)
            if spec.has_band:
                corners = [s] + [next(values) for _ in range(4)]
                band += [min(corners), max(corners)]
        rows.append([value] + central + band)
    return Table(columns=columns, rows=rows)


def _isotropic_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    cos_th = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    sin_th = np.sqrt(1.0 - cos_th ** 2)
    return np.stack([sin_th * np.cos(phi), sin_th * np.sin(phi), cos_th], axis=1)


class _PhaseGrid:
    """Cells in (|q̃|, p_∥, p_⊥) about the drive axis.

    Radial shells are equal-volume in the rescaled position.

    """
    def __init__(self, radius: np.ndarray, momenta: Sequence[np.ndarray],
                 bins: Tuple[int, int, int]):
        n_r, n_par, n_perp = bins
        stacked = np.concatenate(momenta)
        par = stacked[:, 0]
        perp = np.hypot(stacked[:, 1], stacked[:, 2])
        self.r_edges = radius.max() * (1 + 1e-9) * (np.arange(n_r + 1) / n_r) ** (1.0 / 3.0)
        self.par_edges = np.linspace(par.min() - 1e-9, par.max() + 1e-9, n_par + 1)
        self.perp_edges = np.linspace(0.0, perp.max() * (1 + 1e-9), n_perp + 1)
        self.shape = bins
        shell = 4.0 * math.pi / 3.0 * np.diff(self.r_edges ** 3)
        slab = np.diff(self.par_edges)
        ring = math.pi * np.diff(self.perp_edges ** 2)
        self.volumes = (shell[:, None, None] * slab[None, :, None] * ring[None, None, :]).ravel()
        self.radius_index = np.clip(np.searchsorted(self.r_edges, radius, side="right") - 1,
                                    0, n_r - 1)

    def index(self, momenta: np.ndarray) -> np.ndarray:
        """Flat cell index per row of `momenta`, -1 outside the grid."""
        par = momenta[:, 0]
        perp = np.hypot(momenta[:, 1], momenta[:, 2])
        i_par = np.searchsorted(self.par_edges, par, side="right") - 1
        i_perp = np.searchsorted(self.perp_edges, perp, side="right") - 1
        inside = ((i_par >= 0) & (i_par < self.shape[1])
                  & (i_perp >= 0) & (i_perp < self.shape[2]))
        flat = np.ravel_multi_index((self.radius_index, np.clip(i_par, 0, self.shape[1] - 1),
                                     np.clip(i_perp, 0, self.shape[2] - 1)), self.shape)
        return np.where(inside, flat, -1)

    def counts(self, momenta: np.ndarray) -> np.ndarray:
        idx = self.index(momenta)
        return np.bincount(idx[idx >= 0], minlength=self.volumes.size).astype(float)


def _kick(rng: np.random.Generator, momenta: np.ndarray, k_r: float,
          mean_events: float) -> np.ndarray:
    """Add the recoils of Poisson(`mean_events`) scattering events per atom."""
    n_atoms = len(momenta)
    n_steps = max(1, math.ceil(mean_events / PREPULSE_EVENTS_PER_STEP))
    for _ in range(n_steps):
        owner = np.repeat(np.arange(n_atoms), rng.poisson(mean_events / n_steps, size=n_atoms))
        kicks = _isotropic_directions(rng, owner.size)
        kicks[:, 0] += 1.0
        momenta = momenta + k_r * np.stack([np.bincount(owner, weights=kicks[:, c],
                                                        minlength=n_atoms) for c in range(3)],
                                           axis=1)
    return momenta


def _prepulse_batch(state: GasState, k_r: float, transfer: np.ndarray, scatter_rate: float,
                    durations: List[float], n_atoms: int, seed: int,
                    bins: Tuple[int, int, int]) -> List[float]:
    """Mean S per duration for one independent atom sample."""
    t, beta_mu = state.t_over_tf, state.beta_mu
    sample = sample_phase_space(state, n_atoms, seed)
    radius = np.sqrt(np.einsum("ij,ij->i", sample.positions, sample.positions))
    rng = np.random.default_rng([seed, KICK_STREAM])
    kicked = [sample.momenta]
    elapsed = 0.0
    for d in durations:
        if d > elapsed:
            kicked.append(_kick(rng, kicked[-1], k_r, scatter_rate * (d - elapsed)))
            elapsed = d
        else:
            kicked.append(kicked[-1])
    p0, kicked = kicked[0], kicked[1:]
    grid = _PhaseGrid(radius, [p0, kicked[-1], p0 + transfer, kicked[-1] + transfer]
                      + kicked[:-1], bins)
    # occupation per sampled atom per unit cell volume
    weight = kernel_norm(t, beta_mu, 6) / n_atoms
    reference = grid.counts(p0)
    means = []
    for d, p_d in zip(durations, kicked):
        counts = grid.counts(p_d)
        excess = counts * weight / grid.volumes - 1.0
        noise = RESOLUTION_SIGMAS * np.sqrt(counts) * weight / grid.volumes
        if np.any((counts > 0) & (excess > noise)):
            worst = int(np.argmax(np.where(counts > 0, excess - noise, -np.inf)))
            raise ResolutionError(f"Phase-space cell {worst} over-full after {d:g} s: "
                                  f"occupation {excess[worst] + 1:.3g}",
                                  {"duration": d, "cell": worst, "bins": list(bins),
                                   "count": counts[worst], "seed": seed})
        deviation = (counts - reference) * weight / grid.volumes
        p_f = p_d + transfer
        energy = radius ** 2 + np.einsum("ij,ij->i", p_f, p_f)
        idx = grid.index(p_f)
        n_f = special.expit(beta_mu - energy / t) + np.where(idx >= 0, deviation[np.maximum(idx, 0)], 0.0)
        means.append(float(np.mean(1.0 - np.clip(n_f, 0.0, 1.0))))
    return means


def prepulse_relaxation_mc(state: GasState, kf_over_kr: float, scatter_rate: float,
                           durations: Sequence[float], axis: DetectionAxis, seed: int = 0,
                           n_atoms_sim: int = 200_000,
                           bins: Tuple[int, int, int] = (8, 24, 12)) -> Table:
    """S after a resonant pre-pulse of each duration.

    Atoms drawn from the trapped occupation receive Poisson-distributed
    scattering events at `scatter_rate`. Each event adds the absorption kick
    ħk_R along the drive axis and an isotropic emission kick of magnitude
    ħk_R; positions are frozen, trap periods being much longer than the
    pulse. Kicks accumulate from one duration to the next, so longer pulses
    extend the same realisation.

    The final-state occupation is the unperturbed Fermi-Dirac value plus the
    change of a coarse-grained phase-space histogram of the sampled atoms,
    clipped to [0, 1]. The detected transfer is
    :math:`k_R (1 - \\cos\\alpha, -\\sin\\alpha, 0)`.

    The atoms are split into 8 independent batches, each with its own
    sample, kicks and histogram. `s` is the mean over batches and
    `std_error` the standard error of that mean, so histogram noise is
    included in the error.

    Args:
        state: Harmonic state before the pre-pulse
        kf_over_kr: k_F/k_R
        scatter_rate: Events per second per atom, at least one per 5 μs
        durations: Strictly increasing pulse durations in s, at least two
        axis: Detection axis of the scattered light
        seed: Seed of the atom samples and of the kicks
        n_atoms_sim: Number of simulated atoms over all batches
        bins: Cells along (|q̃|, p_∥, p_⊥)

    Returns:
        Table of (duration_s, s, std_error, s_normalized), normalized to the
        mean of the two longest durations

    Raises:
        ResolutionError: If a histogram cell is over-full beyond noise

    """
    if state.confinement != Confinement.harmonic:
        raise DomainError("The pre-pulse simulation needs a harmonic state")
    if scatter_rate * PREPULSE_REFERENCE_DURATION < 1.0:
        raise DomainError(f"scatter_rate {scatter_rate:.4g}/s gives fewer than one event per "
                          f"atom in {PREPULSE_REFERENCE_DURATION * 1e6:g} us")
    durations = [float(d) for d in durations]
    if len(durations) < 2 or durations[0] < 0 or any(b <= a for a, b in zip(durations, durations[1:])):
        raise DomainError(f"durations must be >= 0, strictly increasing, at least two: {durations}")
    if n_atoms_sim < PREPULSE_MIN_ATOMS:
        raise DomainError(f"n_atoms_sim must be >= {PREPULSE_MIN_ATOMS}, got {n_atoms_sim}")
    if not (kf_over_kr > 0 and math.isfinite(kf_over_kr)):
        raise DomainError(f"k_F/k_R must be finite and > 0, got {kf_over_kr}")
    k_r = 1.0 / kf_over_kr
    alpha = math.radians(axis.alpha)
    transfer = k_r * np.array([1.0 - math.cos(alpha), -math.sin(alpha), 0.0])
    quotas = [n_atoms_sim // PREPULSE_BATCHES + (i < n_atoms_sim % PREPULSE_BATCHES)
              for i in range(PREPULSE_BATCHES)]
    seeds = [int(x) for x in np.random.SeedSequence(seed).generate_state(PREPULSE_BATCHES)]
    logger.debug(f"{scatter_rate * durations[-1]:.3g} events per atom over "
                 f"{PREPULSE_BATCHES} batches of {quotas[0]} atoms")

    def run(args):
        quota, batch_seed = args
        return _prepulse_batch(state, k_r, transfer, scatter_rate, durations, quota,
                               batch_seed, bins)
    batches = np.array(parallel_map(run, zip(quotas, seeds)))
    s = np.average(batches, axis=0, weights=quotas)
    std_error = batches.std(axis=0, ddof=1) / math.sqrt(PREPULSE_BATCHES)
    saturated = 0.5 * (s[-1] + s[-2])
    rows = [[d, float(x), float(e), float(x / saturated)]
            for d, x, e in zip(durations, s, std_error)]
    return Table(columns=["duration_s", "s", "std_error", "s_normalized"], rows=rows,
                 units={"duration_s": "s"})
