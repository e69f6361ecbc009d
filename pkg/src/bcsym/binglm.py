"""Bernoulli GLM for the zero-probability component, fitted by IRLS.

Also provides the leverage diagonal of H* = Q^{1/2} Z (Z'QZ)^{-1} Z' Q^{1/2}
with q_i = 1/[alpha_i (1-alpha_i) d0'(alpha_i)^2], needed by the
standardized Pearson residuals of the discrete part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SeparationError
from .links import LOGIT, LinkFunction

_ALPHA_EPS = 1e-12
_SEPARATION_BOUND = 30.0


@dataclass
class BinaryGlmFit:
    kappa: np.ndarray
    fitted_alpha: np.ndarray
    information: np.ndarray      # Z'QZ at the estimate
    leverage: np.ndarray         # diagonal of H*
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    link: LinkFunction


def loglik_binary(kappa, w, Z, link: LinkFunction = LOGIT) -> float:
    alpha = _fitted_alpha(kappa, Z, link)
    return float(np.sum(w * np.log(alpha) + (1.0 - w) * np.log1p(-alpha)))


def score_binary(kappa, w, Z, link: LinkFunction = LOGIT) -> np.ndarray:
    """U_kappa = Z' A T0 alpha-weights, i.e. per-observation chain rule."""
    alpha = _fitted_alpha(kappa, Z, link)
    resid = (w - alpha) / (alpha * (1.0 - alpha) * link.deriv(alpha))
    return Z.T @ resid


def _fitted_alpha(kappa, Z, link: LinkFunction) -> np.ndarray:
    eta = Z @ kappa
    alpha = np.asarray(link.inverse(eta), dtype=float)
    return np.clip(alpha, _ALPHA_EPS, 1.0 - _ALPHA_EPS)


def _irls_weights(alpha, link: LinkFunction) -> np.ndarray:
    return 1.0 / (alpha * (1.0 - alpha) * link.deriv(alpha) ** 2)


def fit_binary_glm(indicator, Z, link: LinkFunction = LOGIT,
                   tol: float = 1e-8, max_iter: int = 100) -> BinaryGlmFit:
    """Maximize the Bernoulli likelihood by IRLS with step halving."""
    w = np.asarray(indicator, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if set(np.unique(w)) - {0.0, 1.0}:
        raise DataError("binary response must contain only 0 and 1")
    if w.min() == w.max():
        raise DataError("binary response must contain both classes")
    n, m = Z.shape
    if np.linalg.matrix_rank(Z) < m:
        raise DataError("binary design matrix is rank deficient")

    # standard GLM start: smoothed per-observation probabilities
    alpha = (w + 0.5) / 2.0
    eta = link.apply(alpha)
    kappa = np.zeros(m)
    ll = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        q = _irls_weights(alpha, link)
        u = eta + (w - alpha) * link.deriv(alpha)
        zq = Z * q[:, None]
        kappa_new = np.linalg.solve(Z.T @ zq, zq.T @ u)
        step = kappa_new - kappa if it > 1 else None
        ll_new = loglik_binary(kappa_new, w, Z, link)
        halvings = 0
        while step is not None and ll_new < ll - 1e-12 and halvings < 20:
            kappa_new = kappa + 0.5 * (kappa_new - kappa)
            ll_new = loglik_binary(kappa_new, w, Z, link)
            halvings += 1
        kappa = kappa_new
        eta = Z @ kappa
        alpha = _fitted_alpha(kappa, Z, link)
        ll = ll_new
        gnorm = float(np.max(np.abs(score_binary(kappa, w, Z, link))))
        if gnorm <= tol:
            break
    else:
        gnorm = float(np.max(np.abs(score_binary(kappa, w, Z, link))))

    if np.max(np.abs(Z @ kappa)) > _SEPARATION_BOUND:
        raise SeparationError(
            "quasi-complete separation detected in the binary component "
            f"(|linear predictor| exceeds {_SEPARATION_BOUND:g})")

    q = _irls_weights(alpha, link)
    information = Z.T @ (Z * q[:, None])
    fit = BinaryGlmFit(kappa=kappa, fitted_alpha=alpha, information=information,
                       leverage=np.empty(n), loglik=ll, converged=gnorm <= tol,
                       iterations=it, gradient_norm=gnorm, link=link)
    fit.leverage = leverage_hstar(fit, Z)
    return fit


def leverage_hstar(fit: BinaryGlmFit, Z) -> np.ndarray:
    """Diagonal of the weighted projection H*; entries in [0,1], trace m."""
    Z = np.asarray(Z, dtype=float)
    alpha = fit.fitted_alpha
    q = _irls_weights(alpha, fit.link)
    aw = Z * np.sqrt(q)[:, None]
    m = aw.T @ aw
    try:
        c = np.linalg.solve(m, aw.T)
    except np.linalg.LinAlgError as exc:
        raise DataError("weighted cross-product matrix is singular") from exc
    return np.einsum("ij,ji->i", aw, c)
