"""Reference results used as oracles by the tests."""
import math

from scipy import integrate, special


def zero_t_homogeneous_s(x):
    """S of a homogeneous gas at T = 0, `x` = k/k_F.

    One minus the overlap of two unit spheres shifted by `x`.

    """
    if x >= 2.0:
        return 1.0
    return 0.75 * x - x ** 3 / 16.0


def sommerfeld_mu_trapped(t_over_tf):
    """μ/E_F of a harmonically trapped gas to second order in T/T_F."""
    return 1.0 - math.pi ** 2 / 3.0 * t_over_tf ** 2


def sommerfeld_mu_uniform(t_over_tf):
    """μ/E_F of a homogeneous gas to second order in T/T_F."""
    return 1.0 - math.pi ** 2 / 12.0 * t_over_tf ** 2


def fd_at_zero(s):
    """f_s(0) = (1 - 2^{1-s}) ζ(s), the Dirichlet eta function."""
    if s == 1.0:
        return math.log(2.0)
    return (1.0 - 2.0 ** (1.0 - s)) * special.zeta(s)


def classical_overlap(k_over_kf, t_over_tf, beta_mu, dims):
    """Leading fugacity term of 1 - S."""
    return 2.0 ** (-dims / 2.0) * math.exp(beta_mu - k_over_kf ** 2 / (2.0 * t_over_tf))


def homogeneous_s_spherical(k_over_kf, t_over_tf, beta_mu):
    """S of a homogeneous gas by brute-force quadrature in spherical coordinates.

    The overlap :math:`\\int n(p^2) n(|p + k|^2) d^3p` is integrated over
    |p| and the cosine of the angle to k.

    """
    mu = t_over_tf * beta_mu

    def n(e):
        return special.expit(beta_mu - e / t_over_tf)
    p_max = math.sqrt(t_over_tf * (max(beta_mu, 0.0) + 30.0))

    def integrand(c, p):
        return p * p * n(p * p) * n(p * p + 2 * p * k_over_kf * c + k_over_kf ** 2)
    points = [math.sqrt(mu)] if mu > 0 else None
    overlap, _ = integrate.dblquad(integrand, 0.0, p_max, -1.0, 1.0, epsabs=1e-12, epsrel=1e-10)
    norm, _ = integrate.quad(lambda p: p * p * n(p * p), 0.0, p_max, points=points,
                             epsabs=1e-13, epsrel=1e-11)
    return 1.0 - overlap / (2.0 * norm)
