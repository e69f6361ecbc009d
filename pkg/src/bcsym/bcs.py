"""The Box-Cox symmetric distribution: transform, density, CDF, quantile, sampling.

A positive variable Y follows the law when its power transform

    z = ((y/mu)^lam - 1) / (sigma*lam)       (lam != 0)
    z = log(y/mu) / sigma                    (lam == 0)

has the truncated symmetric distribution generated by the family's r().
The skewness parameter lam is shared across observations in regression
use, so the vectorized cores broadcast over (y, mu, sigma) with scalar
lam. The lam != 0 branch is evaluated through expm1/log1p so it stays
accurate arbitrarily close to lam = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dgf
from .dgf import DgfFamily
from .errors import DataError


@dataclass(frozen=True)
class BcsParams:
    """Scale mu > 0, relative dispersion sigma > 0, skewness lam."""

    mu: float
    sigma: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0.0):
            raise ValueError("mu must be positive")
        if not (self.sigma > 0.0):
            raise ValueError("sigma must be positive")
        if not np.isfinite(self.lam):
            raise ValueError("lam must be finite")


def _pos_y(y, permissive: bool):
    y = np.asarray(y, dtype=float)
    if not permissive and np.any(y <= 0.0):
        raise DataError("response values must be strictly positive")
    return y


def transform_z_raw(y, mu, sigma, lam: float):
    """Box-Cox transform, broadcast over arrays; lam is a scalar."""
    y = np.asarray(y, dtype=float)
    log_rel = np.log(y / mu)
    if lam == 0.0:
        return log_rel / sigma
    with np.errstate(over="ignore"):
        return np.expm1(lam * log_rel) / (sigma * lam)


def dz_dlambda_raw(y, mu, sigma, lam: float):
    """Derivative of the transform in lam; series below |lam*log(y/mu)| = 1e-3."""
    y = np.asarray(y, dtype=float)
    log_rel = np.log(y / mu)
    if lam == 0.0:
        return log_rel ** 2 / (2.0 * sigma)
    w = lam * log_rel
    with np.errstate(over="ignore", invalid="ignore"):
        direct = ((w - 1.0) * np.expm1(w) + w) / (sigma * lam ** 2)
        series = (log_rel ** 2 / sigma) * (0.5 + w / 3.0 + w ** 2 / 8.0 + w ** 3 / 30.0)
    return np.where(np.abs(w) < 1e-3, series, direct)


def log_pdf_raw(y, mu, sigma, lam: float, family: DgfFamily, permissive: bool = False):
    """Log density, broadcast over (y, mu, sigma). Scalar lam.

    With ``permissive=True`` nonpositive y yields -inf instead of an error,
    which is what optimizer line searches want.
    """
    y = _pos_y(y, permissive)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    ok = y > 0.0
    y_safe = np.where(ok, y, 1.0)
    z = transform_z_raw(y_safe, mu, sigma, lam)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if lam == 0.0:
            out = -np.log(y_safe) - np.log(sigma) + dgf.log_r(family, z * z)
        else:
            delta = 1.0 / (sigma * abs(lam))
            out = ((lam - 1.0) * np.log(y_safe) - lam * np.log(mu) - np.log(sigma)
                   + dgf.log_r(family, z * z)
                   - dgf.log_big_r_many(family, delta))
    out = np.where(ok, out, -np.inf)
    return out if out.ndim else float(out)


def pdf_raw(y, mu, sigma, lam: float, family: DgfFamily, permissive: bool = False):
    return np.exp(log_pdf_raw(y, mu, sigma, lam, family, permissive=permissive))


def cdf_raw(y, mu, sigma, lam: float, family: DgfFamily):
    """Distribution function; zero at and below the origin."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    pos = y > 0.0
    y_safe = np.where(pos, y, 1.0)
    z = transform_z_raw(y_safe, mu, sigma, lam)
    if lam == 0.0:
        out = dgf.big_r_many(family, z)
    elif lam > 0.0:
        delta = 1.0 / (sigma * lam)
        r_hi = dgf.big_r_many(family, delta)
        r_lo = dgf.big_r_many(family, -delta)
        out = (dgf.big_r_many(family, z) - r_lo) / r_hi
    else:
        delta = 1.0 / (sigma * abs(lam))
        out = dgf.big_r_many(family, z) / dgf.big_r_many(family, delta)
    out = np.clip(out, 0.0, 1.0)
    out = np.where(pos, out, 0.0)
    return out if out.ndim else float(out)


def quantile_raw(p, mu, sigma, lam: float, family: DgfFamily):
    """Quantile function by exact inversion of the three CDF branches."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie in (0, 1)")
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if lam == 0.0:
        z = dgf.big_r_inverse_many(family, p)
        out = mu * np.exp(sigma * z)
    else:
        delta = 1.0 / (sigma * abs(lam))
        r_hi = dgf.big_r_many(family, np.asarray(delta, dtype=float))
        if lam > 0.0:
            r_lo = dgf.big_r_many(family, -np.asarray(delta, dtype=float))
            target = p * r_hi + r_lo
        else:
            target = p * r_hi
        target = np.clip(target, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        z = dgf.big_r_inverse_many(family, target)
        out = mu * np.exp(np.log1p(sigma * lam * z) / lam)
    return out if np.ndim(out) else float(out)


def sample_raw(mu, sigma, lam: float, family: DgfFamily, rng: np.random.Generator):
    """One inverse-CDF draw per element of the broadcast (mu, sigma)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    shape = np.broadcast_shapes(mu.shape, sigma.shape)
    u = rng.random(shape if shape else None)
    u = np.clip(u, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return quantile_raw(u, mu, sigma, lam, family)


# ---------------------------------------------------------------------------
# Parameter-record front-end.
# ---------------------------------------------------------------------------

def transform_z(y, params: BcsParams):
    y = _pos_y(y, permissive=False)
    out = transform_z_raw(y, params.mu, params.sigma, params.lam)
    return out if np.ndim(out) else float(out)


def dz_dlambda(y, params: BcsParams):
    y = _pos_y(y, permissive=False)
    out = dz_dlambda_raw(y, params.mu, params.sigma, params.lam)
    return out if np.ndim(out) else float(out)


def log_pdf(y, params: BcsParams, family: DgfFamily, permissive: bool = False):
    return log_pdf_raw(y, params.mu, params.sigma, params.lam, family,
                       permissive=permissive)


def pdf(y, params: BcsParams, family: DgfFamily, permissive: bool = False):
    return np.exp(log_pdf(y, params, family, permissive=permissive))


def cdf(y, params: BcsParams, family: DgfFamily):
    return cdf_raw(y, params.mu, params.sigma, params.lam, family)


def quantile(p, params: BcsParams, family: DgfFamily):
    return quantile_raw(p, params.mu, params.sigma, params.lam, family)


def sample(n: int, params: BcsParams, family: DgfFamily, seed) -> np.ndarray:
    """n independent inverse-CDF draws, deterministic given the seed."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty(0)
    rng = np.random.default_rng(seed)
    return sample_raw(np.full(n, params.mu), np.full(n, params.sigma),
                      params.lam, family, rng)
