"""Residuals, simulated envelopes, case-weight local influence, and fit statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import special as sc

from . import bcs, regress
from .errors import BcsymError, ConvergenceError, DataError
from .regress import FittedModel, _QRES_CLAMP
from .specfun import normal_order_stat_means


@dataclass
class ResidualSet:
    kind: str                 # quantile | randomized_quantile | pearson
    values: np.ndarray
    index: np.ndarray         # original observation indices
    clamped: int = 0          # residuals pinned at the extreme-tail bound
    realization: int | None = None


@dataclass
class InfluenceResult:
    dmax: np.ndarray          # unit-norm worst perturbation direction
    cdmax: float              # curvature at dmax
    ci: np.ndarray            # total local influence per observation
    b: np.ndarray | None = None


@dataclass
class GofReport:
    loglik: float
    n_params: int
    aic: float
    delta_m: float
    upsilon: float
    n_params_with_zeta: int
    aic_with_zeta: float


@dataclass
class EnvelopeResult:
    kind: str
    theoretical: np.ndarray   # expected normal order statistics
    lower: np.ndarray
    upper: np.ndarray
    observed: np.ndarray      # sorted observed residuals
    n_outside: int
    n_replicates: int
    n_failed: int


# ---------------------------------------------------------------------------
# Residuals.
# ---------------------------------------------------------------------------

def _clamped_ndtri(prob: np.ndarray) -> tuple[np.ndarray, int]:
    lo = sc.ndtr(-_QRES_CLAMP)
    clipped = np.clip(prob, lo, 1.0 - lo)
    n_clamped = int(np.count_nonzero(clipped != prob))
    if n_clamped:
        warnings.warn(f"{n_clamped} residual(s) hit the extreme-tail clamp "
                      f"(+-{_QRES_CLAMP})", RuntimeWarning)
    return sc.ndtri(clipped), n_clamped


def quantile_residuals(fit: FittedModel, y) -> ResidualSet:
    """Normal-score residuals of the continuous part; near N(0,1) when the
    model is right. For zero-adjusted fits only the positives enter."""
    y = np.asarray(y, dtype=float)
    if fit.kind == "zabcs":
        idx = np.flatnonzero(y > fit.spec.zero_threshold)
    else:
        idx = np.arange(len(y))
    f = bcs.cdf_raw(y[idx], fit.fitted_mu[idx], fit.fitted_sigma[idx],
                    fit.lam, fit.spec.family)
    vals, clamped = _clamped_ndtri(f)
    return ResidualSet("quantile", vals, idx, clamped)


def randomized_quantile_residuals(fit: FittedModel, y, realizations: int = 4,
                                  seed=None) -> list[ResidualSet]:
    """Randomized normal-score residuals for zero-adjusted fits: zeros map to
    a uniform draw on (0, alpha_i], positives through the mixture CDF."""
    if realizations < 1:
        raise ValueError("realizations must be at least 1")
    if fit.kind != "zabcs":
        raise DataError("randomized quantile residuals apply to zero-adjusted fits")
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    zero = y <= fit.spec.zero_threshold
    pos = ~zero
    alpha = fit.fitted_alpha
    f_pos = bcs.cdf_raw(y[pos], fit.fitted_mu[pos], fit.fitted_sigma[pos],
                        fit.lam, fit.spec.family)
    mix_pos = alpha[pos] + (1.0 - alpha[pos]) * f_pos
    out = []
    for k in range(realizations):
        prob = np.empty(len(y))
        u = rng.uniform(0.0, alpha[zero])
        while np.any(u == 0.0):  # the open endpoint, enforced by rejection
            redo = u == 0.0
            u[redo] = rng.uniform(0.0, alpha[zero][redo])
        prob[zero] = u
        prob[pos] = mix_pos
        vals, clamped = _clamped_ndtri(prob)
        out.append(ResidualSet("randomized_quantile", vals, np.arange(len(y)),
                               clamped, realization=k))
    return out


def pearson_residuals(fit: FittedModel, y) -> ResidualSet:
    """Standardized Pearson residuals of the discrete component."""
    if fit.kind != "zabcs" or fit.discrete is None:
        raise DataError("Pearson residuals apply to zero-adjusted fits")
    y = np.asarray(y, dtype=float)
    zero = (y <= fit.spec.zero_threshold).astype(float)
    alpha = fit.fitted_alpha
    h = fit.discrete.leverage
    denom = alpha * (1.0 - alpha) * (1.0 - h)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > 0.0, (zero - alpha) / np.sqrt(denom), np.nan)
    if np.any(~np.isfinite(vals)):
        warnings.warn("unit leverage made some Pearson residuals undefined",
                      RuntimeWarning)
    return ResidualSet("pearson", vals, np.arange(len(y)))


# ---------------------------------------------------------------------------
# Simulated envelopes.
# ---------------------------------------------------------------------------

def _simulate_response(fit: FittedModel, rng: np.random.Generator) -> np.ndarray:
    mu, sigma, lam = fit.fitted_mu, fit.fitted_sigma, fit.lam
    if fit.kind == "zabcs":
        zero = rng.random(fit.n_obs) < fit.fitted_alpha
        y = np.zeros(fit.n_obs)
        if np.any(~zero):
            y[~zero] = bcs.sample_raw(mu[~zero], sigma[~zero], lam,
                                      fit.spec.family, rng)
        return y
    return bcs.sample_raw(mu, sigma, lam, fit.spec.family, rng)


def _envelope_residuals(fit: FittedModel, y, rng) -> np.ndarray:
    if fit.kind == "zabcs":
        seed = rng.integers(0, 2 ** 63 - 1)
        return randomized_quantile_residuals(fit, y, realizations=1,
                                             seed=seed)[0].values
    return quantile_residuals(fit, y).values


def simulated_envelope(fit: FittedModel, y, design, replicates: int = 100,
                       level: float = 0.95, seed=None,
                       refit: bool = True) -> EnvelopeResult:
    """Pointwise envelope bands from refitted simulations of the fitted law.

    With 19 replicates and level 0.95 the bands are the pointwise min/max.
    Replicates whose refit fails are dropped; more than 10% failures aborts.
    """
    if replicates < 19:
        raise ValueError("need at least 19 replicates for an envelope")
    if fit.convergence.status != "converged":
        raise DataError("envelope requires a converged fit")
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        observed = np.sort(_envelope_residuals(fit, y, rng))
        sims = []
        failed = 0
        for _ in range(replicates):
            y_sim = _simulate_response(fit, rng)
            try:
                if refit:
                    f_sim = regress.fit(y_sim, design, fit.spec, x0=fit.theta)
                    if f_sim.convergence.status != "converged":
                        raise ConvergenceError(f_sim.convergence.status)
                else:
                    f_sim = fit  # fast mode: no refit, score the simulation as-is
                sims.append(np.sort(_envelope_residuals(f_sim, y_sim, rng)))
            except (BcsymError, np.linalg.LinAlgError):
                failed += 1
                if failed > 0.1 * replicates:
                    raise RuntimeError(
                        f"{failed} of {replicates} envelope refits failed") from None
    band = np.vstack(sims)
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    lower = np.quantile(band, lo_q, axis=0, method="lower")
    upper = np.quantile(band, hi_q, axis=0, method="higher")
    n_outside = int(np.count_nonzero((observed < lower) | (observed > upper)))
    theo = normal_order_stat_means(len(observed))
    return EnvelopeResult(kind="zabcs" if fit.kind == "zabcs" else "bcs",
                          theoretical=theo, lower=lower, upper=upper,
                          observed=observed, n_outside=n_outside,
                          n_replicates=len(sims), n_failed=failed)


# ---------------------------------------------------------------------------
# Case-weight local influence.
# ---------------------------------------------------------------------------

def caseweight_delta(fit: FittedModel, y, design) -> np.ndarray:
    """Columns are per-observation score contributions at the estimate,
    row blocks ordered (kappa when present, beta, tau, lam-if-free)."""
    y = np.asarray(y, dtype=float)
    spec = fit.spec
    blocks = []
    if fit.kind == "zabcs":
        zero = y <= spec.zero_threshold
        alpha = fit.fitted_alpha
        resid = ((zero.astype(float) - alpha)
                 / (alpha * (1.0 - alpha) * spec.link_alpha.deriv(alpha)))
        blocks.append(design.Z.T * resid)
        pos = ~zero
    else:
        pos = np.ones(len(y), dtype=bool)
    mu, sigma = fit.fitted_mu[pos], fit.fitted_sigma[pos]
    ws = regress.score_workspace(y[pos], mu, sigma, fit.lam, spec.family)
    t1 = 1.0 / np.asarray(spec.link_mu.deriv(mu), dtype=float)
    t2 = 1.0 / np.asarray(spec.link_sigma.deriv(sigma), dtype=float)
    n = len(y)

    def scatter(rows: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.shape[0], n))
        out[:, pos] = rows
        return out

    blocks.append(scatter(design.X[pos].T * (t1 * ws.mu_star)))
    blocks.append(scatter(design.S[pos].T * (t2 * ws.sigma_star)))
    if fit.lambda_free:
        blocks.append(scatter(ws.lambda_star[None, :]))
    return np.vstack(blocks)


def local_influence(fit: FittedModel, y, design,
                    materialize_b: bool = False) -> InfluenceResult:
    """Normal curvature of the case-weight perturbation: the worst direction
    (largest-curvature eigenvector of B = -Delta' J^{-1} Delta) and the
    per-observation total influence C_i."""
    delta = caseweight_delta(fit, y, design)
    info = fit.observed_information
    try:
        chol = sla.cholesky(info, lower=True)
        g = sla.solve_triangular(chol, delta, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("observed information is not positive definite; "
                               "influence analysis unavailable") from exc
    ci = 2.0 * np.einsum("ij,ij->j", g, g)
    _, svals, vt = np.linalg.svd(g, full_matrices=False)
    dmax = vt[0]
    peak = np.argmax(np.abs(dmax))
    if dmax[peak] < 0.0:
        dmax = -dmax
    cdmax = 2.0 * svals[0] ** 2
    b = -(g.T @ g) if materialize_b else None
    return InfluenceResult(dmax=dmax, cdmax=float(cdmax), ci=ci, b=b)


# ---------------------------------------------------------------------------
# Goodness of fit.
# ---------------------------------------------------------------------------

def gof_report(fits: list[FittedModel], y) -> list[GofReport]:
    """AIC (with and without counting a grid-fixed extra parameter), AIC
    differences against the best model, and the order-statistic statistic."""
    y = np.asarray(y, dtype=float)
    for f in fits:
        if f.n_obs != len(y):
            raise DataError("all fits must be on the same data")
    reports = []
    for f in fits:
        r = f.n_params
        aic = -2.0 * f.loglik + 2.0 * r
        r_z = r + (1 if f.spec.family.has_zeta else 0)
        reports.append(GofReport(
            loglik=f.loglik, n_params=r, aic=aic, delta_m=np.nan,
            upsilon=regress.upsilon_statistic(f, y),
            n_params_with_zeta=r_z, aic_with_zeta=-2.0 * f.loglik + 2.0 * r_z))
    best = min(rep.aic for rep in reports)
    for rep in reports:
        rep.delta_m = rep.aic - best
    return reports
