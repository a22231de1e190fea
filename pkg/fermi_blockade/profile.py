"""Spatially resolved observables of the trapped cloud, imaged along the trap z axis.

In the local density approximation each point of the cloud is a homogeneous
gas at the local reduced chemical potential
:math:`\\beta\\mu - (x^2/R_x^2 + y^2/R_y^2 + z^2/R_z^2)/(T/T_F)`. Integrating the
density along z turns :math:`f_{3/2}` into :math:`f_2`:

.. math::

    n_{col}(x, y) = \\frac{k_F^3 R_z (T/T_F)^2}{8\\pi}
        f_2\\left(\\beta\\mu - \\frac{x^2/R_x^2 + y^2/R_y^2}{T/T_F}\\right)

and the blocked signal of a column is the four-dimensional kernel of
:func:`fermi_blockade.blockade.overlap_ratio` (z and the three momenta).

"""
from typing import Optional, Tuple
import math
import logging

import numpy as np
from pydantic import validator, root_validator
from scipy import interpolate, ndimage

from .blockade import check_transfer, overlap_ratio
from .errors import DomainError, ResolutionError
from .gas import CLASSICAL_BETA_MU, GasScales, GasState, TrapGeometry
from .models import BaseModel
from .specfun import fd_integral, fd_integral_array
from .util import parallel_map


logger = logging.getLogger(__name__)

ATOM_NUMBER_RTOL = 0.01
RATIO_NODES = 64
# scipy.ndimage default, kernel radius in standard deviations
BLUR_TRUNCATE = 4.0


class ScalarMap2D(BaseModel):
    """Gridded image, rows along y and columns along x.

    Attributes:
        values: Non-negative finite values, at least 8 x 8
        pixel_size: Pixel pitch in m
        origin: (column, row) coordinates of the trap center, may be fractional
        units: Unit of `values`

    """
    values: np.ndarray
    pixel_size: float
    origin: Tuple[float, float]
    units: str = ""

    @validator("values")
    def check_values(cls, v):
        v = np.asarray(v, dtype=float)
        if v.ndim != 2 or min(v.shape) < 8:
            raise ValueError(f"Map must be 2D and at least 8x8, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Map values must be finite")
        if np.any(v < 0):
            raise ValueError("Map values must be non-negative")
        return v

    @validator("pixel_size")
    def check_pixel(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"pixel_size must be finite and > 0, got {v}")
        return v

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, units: Optional[str] = None) -> "ScalarMap2D":
        return ScalarMap2D(values=values, pixel_size=self.pixel_size, origin=self.origin,
                           units=self.units if units is None else units)


class RadialProfile(BaseModel):
    bin_centers: np.ndarray
    means: np.ndarray
    counts: np.ndarray

    @root_validator(skip_on_failure=True)
    def check_bins(cls, values):
        centers, counts = values["bin_centers"], values["counts"]
        if np.any(np.diff(centers) <= 0):
            raise ValueError("Bin centers must be strictly increasing")
        if np.any(counts < 1):
            raise ValueError("Every reported bin needs at least one pixel")
        return values


class GridSpec(BaseModel):
    """Image grid centered on the trap."""
    n_x: int = 64
    n_y: int = 64
    pixel_size: float = 0.9e-6

    @validator("n_x", "n_y")
    def check_size(cls, v, field):
        if v < 8:
            raise ValueError(f"{field.name} must be >= 8, got {v}")
        return v

    @validator("pixel_size")
    def check_pixel(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"pixel_size must be finite and > 0, got {v}")
        return v

    @property
    def origin(self) -> Tuple[float, float]:
        return (0.5 * (self.n_x - 1), 0.5 * (self.n_y - 1))

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates (x, y) in m, each of shape (n_y, n_x)."""
        x = (np.arange(self.n_x) - self.origin[0]) * self.pixel_size
        y = (np.arange(self.n_y) - self.origin[1]) * self.pixel_size
        return np.meshgrid(x, y)


class ScatteringMaps(BaseModel):
    """Blocked signal, unblocked signal (column density) and their ratio."""
    blocked: ScalarMap2D
    unblocked: ScalarMap2D
    ratio: ScalarMap2D


def _fermi_radii(scales: GasScales, trap: TrapGeometry) -> Tuple[float, float, float]:
    return tuple(math.sqrt(2.0 * scales.fermi_energy_j / (scales.mass * w ** 2))
                 for w in trap.omegas)


def atom_number(scales: GasScales) -> float:
    """Atoms per spin component, inverting :math:`E_F = (6N)^{1/3}\\hbar\\bar\\omega`."""
    return (scales.fermi_energy_j / scales.hbar_omega_bar_j) ** 3 / 6.0


def _column_prefactor(scales: GasScales, state: GasState, trap: TrapGeometry) -> float:
    r_z = _fermi_radii(scales, trap)[2]
    return scales.fermi_wavevector ** 3 * r_z * state.t_over_tf ** 2 / (8.0 * math.pi)


def _reduced_radius2(scales: GasScales, trap: TrapGeometry, grid: GridSpec) -> np.ndarray:
    r_x, r_y, _ = _fermi_radii(scales, trap)
    x, y = grid.coordinates()
    return (x / r_x) ** 2 + (y / r_y) ** 2


def peak_density(scales: GasScales, state: GasState) -> float:
    """3D density at the trap center per spin, in 1/m³."""
    t = state.t_over_tf
    return (scales.fermi_wavevector ** 3 * (math.pi * t) ** 1.5
            * fd_integral(1.5, state.beta_mu) / (8.0 * math.pi ** 3))


def peak_column_density(scales: GasScales, state: GasState, trap: TrapGeometry) -> float:
    """Column density at the trap center per spin, in 1/m²."""
    return _column_prefactor(scales, state, trap) * fd_integral(2.0, state.beta_mu)


def map_total(grid_map: ScalarMap2D) -> float:
    """Grid sum times pixel area."""
    return float(grid_map.values.sum()) * grid_map.pixel_size ** 2


def column_density(scales: GasScales, state: GasState, trap: TrapGeometry,
                   grid: Optional[GridSpec] = None) -> ScalarMap2D:
    """Column density of one spin component along the trap z axis.

    Raises:
        ResolutionError: If the grid does not hold the atom number to 1%

    """
    grid = grid or GridSpec()
    local_mu = state.beta_mu - _reduced_radius2(scales, trap, grid) / state.t_over_tf
    values = _column_prefactor(scales, state, trap) * fd_integral_array(2.0, local_mu)
    result = ScalarMap2D(values=values, pixel_size=grid.pixel_size, origin=grid.origin,
                         units="atoms/m^2")
    total, expected = map_total(result), atom_number(scales)
    if abs(total / expected - 1.0) > ATOM_NUMBER_RTOL:
        raise ResolutionError(f"Grid holds {total:.6g} atoms, expected {expected:.6g}",
                              {"total": total, "expected": expected, "n_x": grid.n_x,
                               "n_y": grid.n_y, "pixel_size": grid.pixel_size})
    return result


def local_suppression(k_over_kf: float, state: GasState, radius2: np.ndarray,
                      n_nodes: int = RATIO_NODES) -> np.ndarray:
    """Suppression of the column at reduced in-plane radius² `radius2`.

    The column kernel is evaluated on `n_nodes` values of the squared radius
    up to where the local fugacity drops below :math:`e^{-40}`, and
    interpolated with a cubic spline in between. Further out the leading
    fugacity term is used.

    """
    t, beta_mu = state.t_over_tf, state.beta_mu
    top = t * (beta_mu - CLASSICAL_BETA_MU)
    radius2 = np.asarray(radius2, dtype=float)
    ratio = 0.25 * np.exp(beta_mu - radius2 / t - k_over_kf ** 2 / (2.0 * t))
    if top > 0.0:
        nodes = np.linspace(0.0, top, n_nodes)
        blocked = parallel_map(lambda r2: overlap_ratio(k_over_kf, t, beta_mu - r2 / t, dims=4),
                               nodes)
        spline = interpolate.CubicSpline(nodes, blocked)
        logger.debug(f"Column kernel on {n_nodes} nodes up to reduced radius² {top:.4g}")
        ratio = np.where(radius2 <= top, spline(np.minimum(radius2, top)), ratio)
    return np.clip(1.0 - ratio, 0.0, 1.0)


def blocked_scattering_profile(scales: GasScales, state: GasState, trap: TrapGeometry,
                               k_transfer: float, grid: Optional[GridSpec] = None,
                               n_nodes: int = RATIO_NODES) -> ScatteringMaps:
    """Line-of-sight integrated scattering maps at transfer `k_transfer` (units of k_F).

    Returns:
        The blocked signal (column density times local suppression), the
        unblocked signal (the column density) and the local suppression
        ratio

    """
    k_transfer = check_transfer(k_transfer)
    grid = grid or GridSpec()
    column = column_density(scales, state, trap, grid)
    ratio = local_suppression(k_transfer, state, _reduced_radius2(scales, trap, grid), n_nodes)
    return ScatteringMaps(blocked=column.with_values(column.values * ratio),
                          unblocked=column,
                          ratio=column.with_values(ratio, units="1"))


def radial_average(grid_map: ScalarMap2D, bin_width: float,
                   center: Optional[Tuple[float, float]] = None) -> RadialProfile:
    """Azimuthal mean in annuli of width `bin_width` (m) around `center`.

    Args:
        grid_map: The map
        bin_width: Annulus width in m
        center: (column, row) pixel coordinates, defaults to the map origin

    """
    if not (bin_width > 0 and math.isfinite(bin_width)):
        raise DomainError(f"bin_width must be finite and > 0, got {bin_width}")
    n_y, n_x = grid_map.shape
    cx, cy = grid_map.origin if center is None else center
    if not (0.0 <= cx <= n_x - 1 and 0.0 <= cy <= n_y - 1):
        raise DomainError(f"Center ({cx}, {cy}) outside the {n_x}x{n_y} grid")
    rows, cols = np.indices(grid_map.shape)
    r = np.hypot(cols - cx, rows - cy) * grid_map.pixel_size
    index = (r / bin_width).astype(int).ravel()
    counts = np.bincount(index)
    sums = np.bincount(index, weights=grid_map.values.ravel())
    filled = counts > 0
    centers = (np.arange(counts.size) + 0.5) * bin_width
    return RadialProfile(bin_centers=centers[filled], means=sums[filled] / counts[filled],
                         counts=counts[filled])


def gaussian_blur(grid_map: ScalarMap2D, e2_width: float) -> ScalarMap2D:
    """Convolve with a normalized Gaussian of 1/e² full width `e2_width` (m).

    The standard deviation is a quarter of the 1/e² full width. Edges are
    reflected, which keeps the grid sum.

    Raises:
        DomainError: If the truncated kernel is wider than the grid

    """
    if not (e2_width >= 0 and math.isfinite(e2_width)):
        raise DomainError(f"e2_width must be finite and >= 0, got {e2_width}")
    if e2_width == 0:
        return grid_map.with_values(grid_map.values.copy())
    sigma = e2_width / 4.0 / grid_map.pixel_size
    radius = int(BLUR_TRUNCATE * sigma + 0.5)
    if radius > min(grid_map.shape) - 1:
        raise DomainError(f"Blur kernel radius {radius} px exceeds the {grid_map.shape} grid")
    blurred = ndimage.gaussian_filter(grid_map.values, sigma, mode="reflect",
                                      truncate=BLUR_TRUNCATE)
    return grid_map.with_values(np.maximum(blurred, 0.0))


def cloud_diameter(grid_map: ScalarMap2D, threshold: float = 0.1) -> float:
    """Diameter (m) of the disc with the area where the map exceeds `threshold` x peak."""
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"threshold must lie in (0, 1), got {threshold}")
    values = grid_map.values
    area = np.count_nonzero(values > threshold * values.max()) * grid_map.pixel_size ** 2
    return 2.0 * math.sqrt(area / math.pi)
