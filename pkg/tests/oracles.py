"""Independent numerical oracles the implementation is tested against.

Everything here recomputes quantities from first principles (direct
quadrature, bisection, mpmath arbitrary precision) without calling the
code paths under test.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np
from scipy import integrate


def normal_cdf_quadrature(x: float) -> float:
    """Phi(x) by adaptive quadrature of the density."""
    val, _ = integrate.quad(lambda t: np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi),
                            -np.inf, x, epsabs=1e-14, epsrel=1e-12, limit=300)
    return val


def normal_quantile_bisection(p: float, cdf, lo=-12.0, hi=12.0, tol=1e-13) -> float:
    """Invert a CDF by plain bisection."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_k1_integral(x: float) -> float:
    """K_1(x) from its integral representation."""

    def f(t):
        with np.errstate(over="ignore"):
            c = np.cosh(t)
        if not np.isfinite(c) or x * c > 700.0:
            return 0.0
        return np.exp(-x * c) * c

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
    return val


def order_stat_mean_beta_form(i: int, n: int) -> float:
    """E[X_(i:n)] via the probability-integral form
    integral over p of Phi^{-1}(p) Beta(p; i, n-i+1)."""
    from scipy import special as sc

    log_coef = sc.gammaln(n + 1) - sc.gammaln(i) - sc.gammaln(n - i + 1)

    def f(p):
        return sc.ndtri(p) * np.exp(log_coef + (i - 1) * np.log(p)
                                    + (n - i) * np.log1p(-p))

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-10, limit=300)
    return val


def fd_gradient(f, theta: np.ndarray, rel_h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for j in range(len(theta)):
        h = rel_h * max(1.0, abs(theta[j]))
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        out[j] = (f(up) - f(dn)) / (2.0 * h)
    return out


# --- independent density generators (mpmath, written from scratch) ---------

_BCLOI_C = mp.mpf("1.484300029")


def mp_generator(tag: str, zeta):
    """Return the base density rho(z) = r(z^2) as an mpmath callable."""
    if tag == "BCNO":
        return lambda z: mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi)
    if tag == "BCT":
        zt = mp.mpf(zeta)
        const = mp.power(zt, zt / 2) / mp.beta(mp.mpf(1) / 2, zt / 2)
        return lambda z: const * mp.power(zt + z * z, -(zt + 1) / 2)
    if tag == "BCPE":
        zt = mp.mpf(zeta)
        p = mp.power(2, -1 / zt) * mp.sqrt(mp.gamma(1 / zt) / mp.gamma(3 / zt))
        const = zt / (p * mp.power(2, 1 + 1 / zt) * mp.gamma(1 / zt))
        return lambda z: const * mp.exp(-mp.power(z * z, zt / 2) / (2 * p ** zt))
    if tag == "BCLOI":
        return lambda z: _BCLOI_C * mp.exp(-z * z) / (1 + mp.exp(-z * z)) ** 2
    if tag == "BCLOII":
        return lambda z: mp.exp(-mp.fabs(z)) / (1 + mp.exp(-mp.fabs(z))) ** 2
    if tag == "BCHP":
        zt = mp.mpf(zeta)
        const = 1 / (2 * mp.besselk(1, zt))
        return lambda z: const * mp.exp(-zt * mp.sqrt(1 + z * z))
    if tag == "BCSL":
        zt = mp.mpf(zeta)
        a = zt + mp.mpf(1) / 2

        def rho(z):
            u = mp.mpf(z) * z
            if u == 0:
                return zt / ((zt + mp.mpf(1) / 2) * mp.sqrt(2 * mp.pi))
            lower = mp.gammainc(a, 0, u / 2)
            return lower * zt * mp.power(2, zt) / (mp.sqrt(mp.pi) * mp.power(u, a))

        return rho
    if tag == "BCSN":
        zt = mp.mpf(zeta)
        const = 2 / (zt * mp.sqrt(2 * mp.pi))
        return lambda z: const * mp.cosh(z) * mp.exp(-2 * mp.sinh(z) ** 2 / zt ** 2)
    raise ValueError(tag)


def mp_big_r(tag: str, zeta, x: float) -> float:
    """Base CDF by arbitrary-precision quadrature of the scratch generator."""
    rho = mp_generator(tag, zeta)
    x = mp.mpf(x)
    if x >= 0:
        return float(mp.mpf(1) - mp.quad(rho, [x, mp.inf]))
    return float(mp.quad(rho, [-x, mp.inf]))
