"""Complete Fermi-Dirac integrals of real order.

.. math::

    f_s(\\mu) = -\\mathrm{Li}_s(-e^\\mu)
              = \\frac{1}{\\Gamma(s)} \\int_0^\\infty \\frac{t^{s-1}}{e^{t-\\mu} + 1} dt

A single integral representation is used for every :math:`\\mu`. The
quadrature is split at :math:`t = \\max(\\mu, 0)` where the occupation drops,
and for :math:`\\mu < 0` the factor :math:`e^\\mu` is taken out of the
integrand so that the relative accuracy holds deep in the Boltzmann regime.

"""
from typing import Callable, Tuple, Union
import math
import logging
import warnings

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError


logger = logging.getLogger(__name__)

SUPPORTED_ORDERS = (1.0, 1.5, 2.0, 2.5, 3.0)
EPSREL = 1e-11
LIMIT = 200
# ln(1e18): tail truncated once the integrand is 1e-18 of its peak
TAIL_DECADES = 41.45


def adaptive_quad(func: Callable[[float], float], a: float, b: float,
                  epsabs: float = 0.0, epsrel: float = EPSREL,
                  limit: int = LIMIT, points=None,
                  fail_tol: float = 1e-6) -> Tuple[float, float]:
    """Run :func:`scipy.integrate.quad` and check its error estimate.

    Integration warnings are tolerated as long as the reported absolute error
    stays below `fail_tol` times the magnitude of the result (or `epsabs` when
    that is larger). Anything worse raises :class:`NumericalError`.

    Args:
        func: Integrand
        a: Lower limit
        b: Upper limit
        epsabs: Absolute tolerance
        epsrel: Relative tolerance
        limit: Maximum number of subintervals
        points: Break points inside `(a, b)`
        fail_tol: Relative error above which a warning becomes an error

    Returns:
        The integral and its error estimate

    """
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit}
    if points is not None:
        points = sorted(p for p in points if a < p < b)
        if points:
            kwargs["points"] = points
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(func, a, b, **kwargs)
    if caught:
        if error > max(fail_tol * abs(value), 10 * epsabs):
            raise NumericalError(f"Quadrature on [{a}, {b}] did not converge: {caught[0].message}",
                                 {"value": value, "error": error, "a": a, "b": b,
                                  "epsabs": epsabs, "epsrel": epsrel})
        logger.debug(f"Tolerated quadrature warning on [{a}, {b}]: error {error:.2e}")
    return value, error


def check_order(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or s < 1.0:
        raise DomainError(f"Fermi-Dirac order must be a finite real >= 1, got {s}")
    return s


def _tail_limit(s: float, mu: float) -> float:
    """Point beyond which the integrand is below 1e-18 of its peak."""
    start = max(mu, 0.0)

    def log_g(t):
        return (s - 1.0) * math.log(t) - max(t - start, 0.0) if t > 0 else 0.0
    peak = max(start, s - 1.0, 1e-300)
    log_peak = log_g(peak) if peak > 1e-300 else 0.0
    t = peak + 10.0
    while log_g(t) > log_peak - TAIL_DECADES:
        t += 5.0
    return t


def fd_integral(s: float, mu: float) -> float:
    """Complete Fermi-Dirac integral :math:`f_s(\\mu)`.

    Args:
        s: Order, any real >= 1 (1, 3/2, 2, 5/2 and 3 are the orders used
           by the package)
        mu: Reduced chemical potential :math:`\\beta\\mu`

    Returns:
        :math:`f_s(\\mu) > 0`

    """
    s = check_order(s)
    mu = float(mu)
    if not math.isfinite(mu):
        raise DomainError(f"Reduced chemical potential must be finite, got {mu}")
    gamma_s = special.gamma(s)
    upper = _tail_limit(s, mu)
    if mu < 0.0:
        z = math.exp(mu)

        def scaled(t):
            return t ** (s - 1.0) / (math.exp(t) + z)
        value, _ = adaptive_quad(scaled, 0.0, upper)
        return z * value / gamma_s

    def integrand(t):
        x = t - mu
        if x > 0.0:
            e = math.exp(-x)
            return t ** (s - 1.0) * e / (1.0 + e)
        return t ** (s - 1.0) / (1.0 + math.exp(x))
    inner = 0.0
    if mu > 0.0:
        inner, _ = adaptive_quad(integrand, 0.0, mu)
    outer, _ = adaptive_quad(integrand, mu, upper)
    return (inner + outer) / gamma_s


def fd_integral_array(s: float, mu: Union[float, np.ndarray]) -> np.ndarray:
    """Elementwise :func:`fd_integral` over an array of chemical potentials.

    Repeated values are evaluated once.

    """
    mu = np.asarray(mu, dtype=float)
    unique, inverse = np.unique(mu, return_inverse=True)
    values = np.array([fd_integral(s, m) for m in unique], dtype=float)
    return values[inverse].reshape(mu.shape)


def fd_series(s: float, mu: float, n_terms: int = 400) -> float:
    """Alternating fugacity series :math:`\\sum_j (-1)^{j+1} e^{j\\mu} / j^s`.

    Converges for :math:`\\mu \\le 0`; reference oracle for small fugacity.

    """
    s = check_order(s)
    if mu > 0.0:
        raise DomainError(f"Fugacity series needs mu <= 0, got {mu}")
    j = np.arange(1, n_terms + 1, dtype=float)
    signs = np.where(j % 2 == 1, 1.0, -1.0)
    return float(np.sum(signs * np.exp(j * mu) / j ** s))
