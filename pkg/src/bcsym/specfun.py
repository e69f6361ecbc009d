"""Special functions used by the density generators and diagnostics.

All routines are thin, domain-checked wrappers around well-tested scipy
primitives; the test suite validates each one against direct quadrature
oracles. ``normal_order_stat_mean`` additionally offers an exact
quadrature mode (the default is the O(1) Blom approximation, which is
accurate to plot resolution and is all the rank-based goodness-of-fit
statistic needs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sc


@dataclass(frozen=True)
class PrecisionPolicy:
    """Tolerance budget for internal quadrature and root finding."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_quadrature_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_quadrature_subdivisions < 10:
            raise ValueError("max_quadrature_subdivisions must be at least 10")


DEFAULT_POLICY = PrecisionPolicy()


def _check_finite(x, name: str):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def std_normal_cdf(x):
    """Standard normal CDF. Rejects non-finite input."""
    x = _check_finite(x, "x")
    out = sc.ndtr(x)
    return out if out.ndim else float(out)


def std_normal_quantile(p):
    """Standard normal quantile for p in the open unit interval."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie in (0, 1)")
    out = sc.ndtri(p)
    return out if out.ndim else float(out)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return out if out.ndim else float(out)


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive")
    out = sc.gammaln(x)
    return out if out.ndim else float(out)


def reg_lower_incomplete_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x), a > 0, x >= 0."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("a must be positive")
    if np.any(x < 0.0):
        raise ValueError("x must be nonnegative")
    out = sc.gammainc(a, x)
    return out if out.ndim else float(out)


def reg_incomplete_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b), a,b > 0, x in [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("a and b must be positive")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1]")
    out = sc.betainc(a, b, x)
    return out if out.ndim else float(out)


def bessel_k1(x):
    """Modified Bessel function of the second kind, order one, x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive")
    out = sc.k1(x)
    return out if out.ndim else float(out)


def log_bessel_k1(x):
    """log K_1(x), stable for large x via the exponentially scaled form."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive")
    out = np.log(sc.k1e(x)) - x
    return out if out.ndim else float(out)


def normal_order_stat_mean(i: int, n: int, exact: bool = False,
                           policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Expected value of the i-th order statistic of n standard normals.

    The default is the Blom approximation Phi^{-1}((i - 0.375)/(n + 0.25)).
    With ``exact=True`` the order-statistic density is integrated directly,
    which is the oracle the approximation is tested against.
    """
    if not (1 <= i <= n):
        raise ValueError("index must satisfy 1 <= i <= n")
    if not exact:
        return float(sc.ndtri((i - 0.375) / (n + 0.25)))
    # density of X_(i): n!/((i-1)!(n-i)!) Phi^{i-1} (1-Phi)^{n-i} phi
    log_coef = sc.gammaln(n + 1) - sc.gammaln(i) - sc.gammaln(n - i + 1)

    def integrand(x):
        log_pdf = (log_coef - 0.5 * x * x - 0.5 * np.log(2.0 * np.pi)
                   + (i - 1) * sc.log_ndtr(x) + (n - i) * sc.log_ndtr(-x))
        return x * np.exp(log_pdf)

    val, _ = integrate.quad(integrand, -np.inf, np.inf,
                            epsabs=policy.abs_tol, epsrel=policy.rel_tol,
                            limit=policy.max_quadrature_subdivisions)
    return float(val)


def normal_order_stat_means(n: int) -> np.ndarray:
    """Blom scores for all ranks 1..n (vectorized convenience)."""
    if n < 1:
        raise ValueError("n must be positive")
    ranks = np.arange(1, n + 1, dtype=float)
    return sc.ndtri((ranks - 0.375) / (n + 0.25))
