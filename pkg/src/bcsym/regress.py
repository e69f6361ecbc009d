"""Maximum likelihood fitting of Box-Cox symmetric regression models.

The continuous model links the scale and relative-dispersion parameters
to linear predictors; the skewness parameter lam is common to all
observations and either estimated or held fixed. Optimization is
quasi-Newton (BFGS) on the analytic score; the observed information is
obtained by central differences of that score and symmetrized.

Zero-adjusted models factorize exactly into a Bernoulli likelihood for
the zero indicator and a BCS likelihood for the positive observations,
so estimation runs in two separate stages and the joint observed
information is block diagonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy import special as sc

from . import bcs, binglm, dgf
from .dgf import DgfFamily
from .errors import ConvergenceError, DataError
from .formula import DesignMatrices, FormulaAst
from .links import LOG, LOGIT, LinkFunction
from .specfun import normal_order_stat_means

GRAD_TOL = 1e-6
MAX_ITER = 500
_QRES_CLAMP = 8.2  # keeps ndtri finite in double precision


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: formula, family, links, and the lam/zeta modes."""

    formula: FormulaAst
    family: DgfFamily
    link_mu: LinkFunction = LOG
    link_sigma: LinkFunction = LOG
    link_alpha: LinkFunction = LOGIT
    lambda_fixed: float | None = None     # None: estimate lam freely
    zeta_grid: tuple[float, ...] | None = None  # None: zeta fixed at family.zeta
    zero_threshold: float = 0.0           # responses <= threshold count as zero

    @property
    def zero_adjusted(self) -> bool:
        return self.formula.zero_adjusted

    @property
    def lambda_free(self) -> bool:
        return self.lambda_fixed is None


@dataclass
class Convergence:
    iterations: int
    gradient_norm: float
    status: str  # converged | max_iter | failed


@dataclass
class ScoreWorkspace:
    """Per-observation score ingredients at a given parameter point."""

    z: np.ndarray
    mu_star: np.ndarray
    sigma_star: np.ndarray
    lambda_star: np.ndarray
    xi: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


@dataclass
class FittedModel:
    kind: str                      # "bcs" | "zabcs"
    spec: ModelSpec
    beta: np.ndarray
    tau: np.ndarray
    kappa: np.ndarray | None
    lam: float
    lambda_free: bool
    zeta: float | None
    loglik: float
    observed_information: np.ndarray
    std_errors: np.ndarray
    se_available: bool
    convergence: Convergence
    fitted_mu: np.ndarray
    fitted_sigma: np.ndarray
    fitted_alpha: np.ndarray | None
    param_names: list[str]
    n_obs: int
    loglik_discrete: float | None = None
    loglik_continuous: float | None = None
    discrete: binglm.BinaryGlmFit | None = None

    @property
    def theta(self) -> np.ndarray:
        parts = [] if self.kappa is None else [self.kappa]
        parts += [self.beta, self.tau]
        if self.lambda_free:
            parts.append([self.lam])
        return np.concatenate(parts)

    @property
    def n_params(self) -> int:
        return len(self.theta)


# ---------------------------------------------------------------------------
# Likelihood and analytic score for the continuous part.
# ---------------------------------------------------------------------------

def _split_theta(theta: np.ndarray, p: int, q: int, spec: ModelSpec):
    beta = theta[:p]
    tau = theta[p:p + q]
    lam = theta[p + q] if spec.lambda_free else spec.lambda_fixed
    return beta, tau, float(lam)

def _predictors(theta, design: DesignMatrices, spec: ModelSpec):
    beta, tau, lam = _split_theta(theta, design.X.shape[1], design.S.shape[1], spec)
    with np.errstate(over="ignore", invalid="ignore"):
        mu = np.asarray(spec.link_mu.inverse(design.X @ beta), dtype=float)
        sigma = np.asarray(spec.link_sigma.inverse(design.S @ tau), dtype=float)
    ok = (np.all(np.isfinite(mu)) and np.all(mu > 0.0)
          and np.all(np.isfinite(sigma)) and np.all(sigma > 0.0)
          and np.isfinite(lam))
    return mu, sigma, lam, ok


def loglik_bcs(theta, y, design: DesignMatrices, spec: ModelSpec) -> float:
    """Log likelihood of the continuous model; -inf outside the valid region."""
    y = np.asarray(y, dtype=float)
    mu, sigma, lam, ok = _predictors(np.asarray(theta, dtype=float), design, spec)
    if not ok:
        return -np.inf
    terms = bcs.log_pdf_raw(y, mu, sigma, lam, spec.family, permissive=True)
    total = float(np.sum(terms))
    return total if np.isfinite(total) else -np.inf


def score_workspace(y, mu, sigma, lam: float, family: DgfFamily) -> ScoreWorkspace:
    """The mu*/sigma*/lambda* vectors of the analytic score."""
    y = np.asarray(y, dtype=float)
    z = bcs.transform_z_raw(y, mu, sigma, lam)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        vz = dgf.v(family, z)
        zv = np.where(z == 0.0, 0.0, z * vz)
        log_rel = np.log(y / mu)
        dzdl = bcs.dz_dlambda_raw(y, mu, sigma, lam)
        mu_star = -lam / mu + (z * sigma * lam + 1.0) * zv / (mu * sigma)
        sigma_star = (-1.0 + zv * z) / sigma
        lambda_star = log_rel - zv * dzdl
        if lam != 0.0:
            delta = 1.0 / (sigma * abs(lam))
            xi = np.exp(dgf.log_r(family, np.asarray(delta) ** 2)
                        - dgf.log_big_r_many(family, delta))
            xi = np.broadcast_to(xi, z.shape).astype(float)
            sigma_star = sigma_star + xi / (abs(lam) * sigma ** 2)
            lambda_star = lambda_star + np.sign(lam) * xi / (sigma * lam ** 2)
        else:
            xi = np.zeros_like(z)
    return ScoreWorkspace(z=z, mu_star=mu_star, sigma_star=sigma_star,
                          lambda_star=lambda_star, xi=xi,
                          t1=np.empty(0), t2=np.empty(0))


def _workspace(y, design: DesignMatrices, spec: ModelSpec, mu, sigma, lam):
    ws = score_workspace(y, mu, sigma, lam, spec.family)
    ws.t1 = 1.0 / np.asarray(spec.link_mu.deriv(mu), dtype=float)
    ws.t2 = 1.0 / np.asarray(spec.link_sigma.deriv(sigma), dtype=float)
    return ws


def score_bcs(theta, y, design: DesignMatrices, spec: ModelSpec) -> np.ndarray:
    """Analytic score (gradient of loglik_bcs) in the estimated parameters."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    mu, sigma, lam, ok = _predictors(theta, design, spec)
    if not ok:
        return np.zeros_like(theta)
    ws = _workspace(y, design, spec, mu, sigma, lam)
    u_beta = design.X.T @ (ws.t1 * ws.mu_star)
    u_tau = design.S.T @ (ws.t2 * ws.sigma_star)
    parts = [u_beta, u_tau]
    if spec.lambda_free:
        parts.append([np.sum(ws.lambda_star)])
    return np.concatenate(parts)


def init_theta(y, design: DesignMatrices, spec: ModelSpec) -> np.ndarray:
    """Starting values: least squares on the linked response, a quartile-based
    dispersion guess in the first tau slot, and lam = 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DataError("starting values need strictly positive responses")
    n, p = design.X.shape
    q = design.S.shape[1]
    if n <= p + q + 1:
        raise DataError("too few observations for the requested model")
    target = np.asarray(spec.link_mu.apply(y), dtype=float)
    xtx = design.X.T @ design.X
    try:
        beta0 = np.linalg.solve(xtx, design.X.T @ target)
    except np.linalg.LinAlgError as exc:
        raise DataError("X'X is singular; scale design matrix is rank deficient") from exc
    q1, q2, q3 = np.quantile(y, [0.25, 0.5, 0.75])
    cv = 0.75 * (q3 - q1) / q2
    tau1 = float(np.arcsinh(cv / 1.5) / sc.ndtri(0.75))
    tau0 = np.zeros(q)
    tau0[0] = tau1
    theta0 = np.concatenate([beta0, tau0])
    if spec.lambda_free:
        theta0 = np.append(theta0, 0.0)
    return theta0


# ---------------------------------------------------------------------------
# Quasi-Newton driver.
# ---------------------------------------------------------------------------

def _neg_value_and_grad(y, design, spec):
    def fun(theta):
        ll = loglik_bcs(theta, y, design, spec)
        if not np.isfinite(ll):
            return np.inf, np.zeros_like(theta)
        return -ll, -score_bcs(theta, y, design, spec)
    return fun


def _maximize(fun, x0: np.ndarray, gtol: float = GRAD_TOL):
    """BFGS with one same-point restart and one jittered restart."""
    total_iter = 0
    best = None

    def attempt(start):
        nonlocal total_iter, best
        res = optimize.minimize(fun, start, jac=True, method="BFGS",
                                options={"gtol": gtol, "maxiter": MAX_ITER})
        total_iter += res.nit
        gnorm = float(np.max(np.abs(res.jac))) if res.jac is not None else np.inf
        cand = (res.fun, gnorm, res.x)
        if best is None or cand[0] < best[0]:
            best = cand
        return gnorm <= gtol

    if attempt(np.asarray(x0, dtype=float)):
        return best[2], Convergence(total_iter, best[1], "converged")
    # fresh-Hessian restart at the incumbent, then a jittered restart
    if attempt(best[2].copy()):
        return best[2], Convergence(total_iter, best[1], "converged")
    rng = np.random.default_rng(20250810)
    jitter = 0.1 * np.maximum(1.0, np.abs(x0)) * rng.standard_normal(len(x0))
    if attempt(np.asarray(x0, dtype=float) + jitter):
        return best[2], Convergence(total_iter, best[1], "converged")
    status = "max_iter" if total_iter >= MAX_ITER else "failed"
    return best[2], Convergence(total_iter, best[1], status)


def _newton_polish(theta, conv: Convergence, y, design, spec,
                   gtol: float = GRAD_TOL):
    """Drive the score to zero with damped Newton steps on the numeric
    observed information after BFGS stalls short of the gradient tolerance.

    Falls back to the stall criterion (relative log-likelihood change below
    1e-10 with a near-zero gradient) when Newton cannot improve further.
    """
    theta = np.asarray(theta, dtype=float)
    ll = loglik_bcs(theta, y, design, spec)
    gnorm = conv.gradient_norm
    iters = conv.iterations
    stalled = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(15):
            u = score_bcs(theta, y, design, spec)
            gnorm = float(np.max(np.abs(u)))
            if gnorm <= gtol:
                return theta, Convergence(iters, gnorm, "converged")
            info = observed_information(theta, y, design, spec)
            try:
                step = np.linalg.solve(info, u)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            ll_new = loglik_bcs(theta + t * step, y, design, spec)
            while ll_new < ll and t > 1e-6:
                t *= 0.5
                ll_new = loglik_bcs(theta + t * step, y, design, spec)
            if ll_new < ll:
                break
            iters += 1
            stalled = abs(ll_new - ll) <= 1e-10 * max(1.0, abs(ll_new))
            theta = theta + t * step
            ll = ll_new
            if stalled:
                break
    u = score_bcs(theta, y, design, spec)
    gnorm = float(np.max(np.abs(u)))
    if gnorm <= gtol or (stalled and gnorm <= 1e-3):
        return theta, Convergence(iters, gnorm, "converged")
    return theta, Convergence(iters, gnorm, conv.status)


def observed_information(theta_hat, y, design: DesignMatrices,
                         spec: ModelSpec) -> np.ndarray:
    """Numeric observed information: symmetrized central differences of the
    analytic score, step 1e-5 * max(1, |theta_j|) per coordinate."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    score = score_zabcs if (spec.zero_adjusted and design.Z is not None) else score_bcs
    k = len(theta_hat)
    jac = np.empty((k, k))
    for j in range(k):
        h = 1e-5 * max(1.0, abs(theta_hat[j]))
        up = theta_hat.copy()
        dn = theta_hat.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (score(up, y, design, spec) - score(dn, y, design, spec)) / (2 * h)
    info = -0.5 * (jac + jac.T)
    if np.any(np.linalg.eigvalsh(info) <= 0.0):
        warnings.warn("observed information is not positive definite; "
                      "the fit may not be a proper maximum", RuntimeWarning)
    return info


def _std_errors(info: np.ndarray) -> tuple[np.ndarray, bool]:
    try:
        cov = np.linalg.inv(info)
        diag = np.diag(cov)
        if np.any(diag <= 0.0) or not np.all(np.isfinite(diag)):
            raise np.linalg.LinAlgError
        return np.sqrt(diag), True
    except np.linalg.LinAlgError:
        warnings.warn("observed information is not invertible; "
                      "standard errors are unavailable", RuntimeWarning)
        return np.full(info.shape[0], np.nan), False


def _param_names(design: DesignMatrices, spec: ModelSpec,
                 include_kappa: bool) -> list[str]:
    names = []
    if include_kappa and design.z_names is not None:
        names += [f"alpha:{c}" for c in design.z_names]
    names += [f"mu:{c}" for c in design.x_names]
    names += [f"sigma:{c}" for c in design.s_names]
    if spec.lambda_free:
        names.append("lambda")
    return names


def fit_bcs(y, design: DesignMatrices, spec: ModelSpec,
            x0: np.ndarray | None = None) -> FittedModel:
    """Fit the continuous model by BFGS on the analytic score."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= spec.zero_threshold):
        raise DataError("response contains zeros; zero-adjusted fitting "
                        "requires a third formula part")
    start = init_theta(y, design, spec) if x0 is None else np.asarray(x0, dtype=float)
    fun = _neg_value_and_grad(y, design, spec)
    theta_hat, conv = _maximize(fun, start)
    if conv.status != "converged":
        theta_hat, conv = _newton_polish(theta_hat, conv, y, design, spec)
    mu, sigma, lam, _ = _predictors(theta_hat, design, spec)
    info = observed_information(theta_hat, y, design, spec)
    se, se_ok = _std_errors(info)
    p, q = design.X.shape[1], design.S.shape[1]
    beta, tau, lam = _split_theta(theta_hat, p, q, spec)
    return FittedModel(
        kind="bcs", spec=spec, beta=beta, tau=tau, kappa=None, lam=lam,
        lambda_free=spec.lambda_free, zeta=spec.family.zeta,
        loglik=loglik_bcs(theta_hat, y, design, spec),
        observed_information=info, std_errors=se, se_available=se_ok,
        convergence=conv, fitted_mu=mu, fitted_sigma=sigma, fitted_alpha=None,
        param_names=_param_names(design, spec, include_kappa=False),
        n_obs=len(y))


# ---------------------------------------------------------------------------
# Zero-adjusted model: exact two-stage estimation.
# ---------------------------------------------------------------------------

def _zero_indicator(y: np.ndarray, spec: ModelSpec) -> np.ndarray:
    if np.any(y < 0.0):
        raise DataError("responses must be nonnegative")
    return y <= spec.zero_threshold


def _positive_design(design: DesignMatrices, pos: np.ndarray) -> DesignMatrices:
    xp, sp_ = design.X[pos], design.S[pos]
    for mat, names, part in ((xp, design.x_names, "scale (mu)"),
                             (sp_, design.s_names, "dispersion (sigma)")):
        if np.linalg.matrix_rank(mat) < mat.shape[1]:
            raise DataError(f"{part} design matrix loses rank on the positive "
                            "observations")
    return DesignMatrices(xp, sp_, None, design.x_names, design.s_names, None)


def loglik_zabcs(theta, y, design: DesignMatrices, spec: ModelSpec) -> float:
    y = np.asarray(y, dtype=float)
    zero = _zero_indicator(y, spec)
    m = design.Z.shape[1]
    ll1 = binglm.loglik_binary(np.asarray(theta[:m], dtype=float),
                               zero.astype(float), design.Z, spec.link_alpha)
    pos = ~zero
    ll2 = loglik_bcs(np.asarray(theta[m:], dtype=float), y[pos],
                     _positive_design(design, pos), spec)
    return ll1 + ll2


def score_zabcs(theta, y, design: DesignMatrices, spec: ModelSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    zero = _zero_indicator(y, spec)
    m = design.Z.shape[1]
    u1 = binglm.score_binary(np.asarray(theta[:m], dtype=float),
                             zero.astype(float), design.Z, spec.link_alpha)
    pos = ~zero
    u2 = score_bcs(np.asarray(theta[m:], dtype=float), y[pos],
                   _positive_design(design, pos), spec)
    return np.concatenate([u1, u2])


def fit_zabcs(y, design: DesignMatrices, spec: ModelSpec,
              x0: np.ndarray | None = None) -> FittedModel:
    """Two-stage fit: Bernoulli GLM on the zero indicator, then the
    continuous model on the positive observations."""
    y = np.asarray(y, dtype=float)
    if design.Z is None or not spec.zero_adjusted:
        raise DataError("zero-adjusted fitting needs a third formula part")
    zero = _zero_indicator(y, spec)
    if not np.any(zero):
        raise DataError("no zero responses: fit a plain (two-part) model instead")
    if np.all(zero):
        raise DataError("no positive responses: nothing to fit the continuous "
                        "part on")
    m = design.Z.shape[1]
    stage1 = binglm.fit_binary_glm(zero.astype(float), design.Z, spec.link_alpha)
    pos = ~zero
    design_pos = _positive_design(design, pos)
    x0_cont = None if x0 is None else np.asarray(x0, dtype=float)[m:]
    stage2 = fit_bcs(y[pos], design_pos, spec, x0=x0_cont)

    theta = np.concatenate([stage1.kappa, stage2.theta])
    info = observed_information(theta, y, design, spec)
    se, se_ok = _std_errors(info)
    with np.errstate(over="ignore", invalid="ignore"):
        mu_all = np.asarray(spec.link_mu.inverse(design.X @ stage2.beta), dtype=float)
        sigma_all = np.asarray(spec.link_sigma.inverse(design.S @ stage2.tau),
                               dtype=float)
    conv = Convergence(
        iterations=stage1.iterations + stage2.convergence.iterations,
        gradient_norm=max(stage1.gradient_norm, stage2.convergence.gradient_norm),
        status=stage2.convergence.status if stage1.converged else "failed")
    return FittedModel(
        kind="zabcs", spec=spec, beta=stage2.beta, tau=stage2.tau,
        kappa=stage1.kappa, lam=stage2.lam, lambda_free=spec.lambda_free,
        zeta=spec.family.zeta,
        loglik=stage1.loglik + stage2.loglik,
        observed_information=info, std_errors=se, se_available=se_ok,
        convergence=conv, fitted_mu=mu_all, fitted_sigma=sigma_all,
        fitted_alpha=stage1.fitted_alpha,
        param_names=_param_names(design, spec, include_kappa=True),
        n_obs=len(y), loglik_discrete=stage1.loglik,
        loglik_continuous=stage2.loglik, discrete=stage1)


def fit(y, design: DesignMatrices, spec: ModelSpec,
        x0: np.ndarray | None = None) -> FittedModel:
    """Dispatch on the formula arity."""
    return fit_zabcs(y, design, spec, x0=x0) if spec.zero_adjusted \
        else fit_bcs(y, design, spec, x0=x0)


# ---------------------------------------------------------------------------
# Selection of the extra parameter and Wald-type inference.
# ---------------------------------------------------------------------------

def quantile_residual_values(fit: FittedModel, y) -> np.ndarray:
    """Quantile residuals of the continuous part (positives only for ZABCS)."""
    y = np.asarray(y, dtype=float)
    if fit.kind == "zabcs":
        pos = y > fit.spec.zero_threshold
        y = y[pos]
        mu, sigma = fit.fitted_mu[pos], fit.fitted_sigma[pos]
    else:
        mu, sigma = fit.fitted_mu, fit.fitted_sigma
    f = bcs.cdf_raw(y, mu, sigma, fit.lam, fit.spec.family)
    lo = sc.ndtr(-_QRES_CLAMP)
    clipped = np.clip(f, lo, 1.0 - lo)
    return sc.ndtri(clipped)


def upsilon_statistic(fit: FittedModel, y) -> float:
    """Mean absolute gap between sorted quantile residuals and the expected
    standard-normal order statistics (continuous part only)."""
    res = np.sort(quantile_residual_values(fit, y))
    return float(np.mean(np.abs(res - normal_order_stat_means(len(res)))))


@dataclass
class ZetaRow:
    zeta: float
    loglik: float | None
    upsilon: float | None
    status: str
    selected: bool = False


def select_zeta(y, design: DesignMatrices, spec: ModelSpec,
                grid) -> tuple[float, list[ZetaRow]]:
    """Fit at each grid value of the extra parameter; pick the smallest
    upsilon among converged fits (ties toward smaller zeta); the profile
    log-likelihood is recorded alongside."""
    grid = [float(g) for g in grid]
    if not grid:
        raise DataError("empty zeta grid")
    if not spec.family.has_zeta:
        raise DataError(f"family {spec.family.tag} has no extra parameter")
    lo, _hi = dgf.zeta_domain(spec.family.tag)
    rows: list[ZetaRow] = []
    for z in grid:
        closed_lo = spec.family.tag == "BCPE"
        if (z < lo) or (z == lo and not closed_lo):
            rows.append(ZetaRow(z, None, None, "outside_domain"))
            continue
        spec_z = replace(spec, family=DgfFamily(spec.family.tag, z))
        try:
            f = fit(y, design, spec_z)
        except (DataError, ConvergenceError, np.linalg.LinAlgError):
            rows.append(ZetaRow(z, None, None, "failed"))
            continue
        if f.convergence.status != "converged":
            rows.append(ZetaRow(z, f.loglik, None, f.convergence.status))
            continue
        rows.append(ZetaRow(z, f.loglik, upsilon_statistic(f, y), "converged"))
    usable = [r for r in rows if r.status == "converged"]
    if not usable:
        raise ConvergenceError("no grid value produced a converged fit")
    best = min(usable, key=lambda r: (r.upsilon, r.zeta))
    best.selected = True
    return best.zeta, rows


def wald_inference(fit: FittedModel) -> list[dict]:
    """Per-coefficient estimates, standard errors, z statistics and two-sided
    normal p-values. The lam row appears only when lam was estimated."""
    theta = fit.theta
    rows = []
    for name, est, se in zip(fit.param_names, theta, fit.std_errors):
        block, _, label = name.partition(":")
        if block == "lambda":
            block, label = "lambda", "lambda"
        if np.isfinite(se) and se > 0.0:
            zval = est / se
            pval = 2.0 * sc.ndtr(-abs(zval))
        else:
            zval, pval = None, None
        rows.append({"block": block, "name": label, "estimate": float(est),
                     "std_error": float(se) if np.isfinite(se) else None,
                     "z": None if zval is None else float(zval),
                     "p_value": None if pval is None else float(pval)})
    return rows
