"""Zero-adjusted Box-Cox symmetric law: point mass at zero plus a BCS part."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bcs
from .bcs import BcsParams
from .dgf import DgfFamily


@dataclass(frozen=True)
class ZabcsParams:
    """Zero probability alpha in (0,1) and the continuous-part parameters."""

    alpha: float
    continuous: BcsParams

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")


def density_or_mass(y, params: ZabcsParams, family: DgfFamily):
    """Point mass alpha at zero; (1-alpha) times the BCS density above it."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("y must be nonnegative")
    c = params.continuous
    cont = bcs.pdf_raw(np.where(y > 0.0, y, 1.0), c.mu, c.sigma, c.lam, family)
    out = np.where(y == 0.0, params.alpha, (1.0 - params.alpha) * cont)
    return out if out.ndim else float(out)


def cdf(y, params: ZabcsParams, family: DgfFamily):
    y = np.asarray(y, dtype=float)
    c = params.continuous
    cont = bcs.cdf_raw(y, c.mu, c.sigma, c.lam, family)
    out = np.where(y >= 0.0, params.alpha + (1.0 - params.alpha) * cont, 0.0)
    return out if out.ndim else float(out)


def quantile(p, params: ZabcsParams, family: DgfFamily):
    """Zero for p <= alpha, else the rescaled BCS quantile."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie in (0, 1)")
    c = params.continuous
    pc = (p - params.alpha) / (1.0 - params.alpha)
    pc_safe = np.clip(pc, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    cont = bcs.quantile_raw(pc_safe, c.mu, c.sigma, c.lam, family)
    out = np.where(p <= params.alpha, 0.0, cont)
    return out if out.ndim else float(out)


def sample(n: int, params: ZabcsParams, family: DgfFamily, seed) -> np.ndarray:
    """Inverse-CDF draws; the zero fraction concentrates at alpha."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty(0)
    rng = np.random.default_rng(seed)
    c = params.continuous
    zero = rng.random(n) < params.alpha
    out = np.zeros(n)
    n_pos = int(np.count_nonzero(~zero))
    if n_pos:
        out[~zero] = bcs.sample_raw(np.full(n_pos, c.mu), np.full(n_pos, c.sigma),
                                    c.lam, family, rng)
    return out
