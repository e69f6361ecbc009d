"""Command-line interface: fit, diagnose, select-zeta, simulate, gen-data.

All commands read CSV (header row required) and emit a schema-versioned
JSON report on stdout (or to --out). Exit codes: 0 success, 2 data or
usage error, 3 convergence failure (the report is still emitted).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np
from scipy import special as sc

from . import binglm, data, diagnostics, regress
from .dgf import FAMILY_TAGS, DgfFamily, ZETA_FAMILIES
from .errors import BcsymError, ConvergenceError, DataError
from .formula import build_design, parse_formula, unparse_formula
from .links import positive_link, probability_link
from .regress import FittedModel, ModelSpec

SCHEMA_VERSION = "1.0"


def _sanitize(obj):
    """JSON-safe conversion: numpy scalars/arrays to native, non-finite to None."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def _emit_json(report: dict, out: str | None):
    text = json.dumps(_sanitize(report), indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_table(path: str, header: list[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _parse_grid(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) != 3:
            raise DataError("grid must be lo:hi:step or a comma-separated list")
        lo, hi, step = (float(p) for p in pieces)
        if step <= 0 or hi < lo:
            raise DataError("grid must satisfy lo <= hi and step > 0")
        values = list(np.arange(lo, hi + 1e-9, step))
    else:
        values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise DataError("empty zeta grid")
    return values


def _family_from_args(args) -> DgfFamily:
    tag = args.family.upper()
    if tag not in FAMILY_TAGS:
        raise DataError(f"unknown family {args.family!r}; choose one of {FAMILY_TAGS}")
    zeta = getattr(args, "zeta", None)
    if tag in ZETA_FAMILIES and zeta is None:
        grid = getattr(args, "zeta_grid", None)
        if grid:
            for z in _parse_grid(grid):
                try:
                    return DgfFamily(tag, z)
                except ValueError:
                    continue
            raise DataError("no zeta grid value lies in the family's domain")
        raise DataError(f"family {tag} needs --zeta or --zeta-grid")
    return DgfFamily(tag, zeta)


def _load_model_inputs(args):
    """Shared fit/diagnose plumbing: dataset -> design matrices and spec."""
    dataset = data.read_csv(args.data, delimiter=args.delimiter)
    ast = parse_formula(args.formula)
    referenced = [ast.response] + ast.covariates()
    dataset = data.drop_missing(dataset, referenced)
    if not dataset.is_numeric(ast.response):
        raise DataError(f"response column {ast.response!r} is not numeric")
    design = build_design(dataset, ast)
    spec = ModelSpec(
        formula=ast,
        family=_family_from_args(args),
        link_mu=positive_link(args.link_mu),
        link_sigma=positive_link(args.link_sigma),
        link_alpha=probability_link(args.link_alpha),
        lambda_fixed=args.fix_lambda,
    )
    y = dataset[ast.response]
    return dataset, design, spec, y


def _model_section(spec: ModelSpec) -> dict:
    return {
        "formula": unparse_formula(spec.formula),
        "kind": "zabcs" if spec.zero_adjusted else "bcs",
        "family": spec.family.tag,
        "zeta": spec.family.zeta,
        "link_mu": spec.link_mu.tag,
        "link_sigma": spec.link_sigma.tag,
        "link_alpha": spec.link_alpha.tag if spec.zero_adjusted else None,
        "lambda_fixed": spec.lambda_fixed,
    }


def _fit_report(args, dataset, spec, fit: FittedModel, y,
                zeta_table=None) -> dict:
    gof = diagnostics.gof_report([fit], y)[0]
    report = {
        "schema_version": SCHEMA_VERSION,
        "invocation": list(args.invocation),
        "model": _model_section(spec),
        "data": {
            "path": args.data,
            "delimiter": args.delimiter,
            "n": int(len(y)),
            "n_dropped": int(dataset.dropped_rows),
            "n_zeros": int(np.count_nonzero(y <= spec.zero_threshold)),
        },
        "coefficients": regress.wald_inference(fit),
        "fit": {
            "loglik": fit.loglik,
            "loglik_discrete": fit.loglik_discrete,
            "loglik_continuous": fit.loglik_continuous,
            "n_params": fit.n_params,
            "aic": gof.aic,
            "aic_with_zeta": gof.aic_with_zeta,
            "upsilon": gof.upsilon,
            "convergence": {
                "status": fit.convergence.status,
                "iterations": fit.convergence.iterations,
                "gradient_norm": fit.convergence.gradient_norm,
            },
        },
        "param_names": fit.param_names,
        "theta": fit.theta,
        "observed_information": fit.observed_information,
        "seed": args.seed,
    }
    if zeta_table is not None:
        report["zeta_table"] = [
            {"zeta": r.zeta, "loglik": r.loglik, "upsilon": r.upsilon,
             "status": r.status, "selected": r.selected} for r in zeta_table]
    return report


def cmd_fit(args) -> int:
    dataset, design, spec, y = _load_model_inputs(args)
    zeta_table = None
    if args.zeta_grid:
        best, zeta_table = regress.select_zeta(y, design, spec,
                                               _parse_grid(args.zeta_grid))
        spec = ModelSpec(spec.formula, DgfFamily(spec.family.tag, best),
                         spec.link_mu, spec.link_sigma, spec.link_alpha,
                         spec.lambda_fixed)
    fit = regress.fit(y, design, spec)
    report = _fit_report(args, dataset, spec, fit, y, zeta_table)
    _emit_json(report, args.out)
    return 0 if fit.convergence.status == "converged" else 3


def _rebuild_fit(report: dict, data_path: str | None, delimiter: str):
    """Reconstruct a FittedModel exactly from a fit report (no refitting)."""
    model = report["model"]
    path = data_path or report["data"]["path"]
    dataset = data.read_csv(path, delimiter=delimiter or report["data"]["delimiter"])
    ast = parse_formula(model["formula"])
    dataset = data.drop_missing(dataset, [ast.response] + ast.covariates())
    design = build_design(dataset, ast)
    y = dataset[ast.response]
    spec = ModelSpec(
        formula=ast,
        family=DgfFamily(model["family"], model["zeta"]),
        link_mu=positive_link(model["link_mu"]),
        link_sigma=positive_link(model["link_sigma"]),
        link_alpha=probability_link(model["link_alpha"] or "logit"),
        lambda_fixed=model["lambda_fixed"],
    )
    theta = np.asarray(report["theta"], dtype=float)
    names = report["param_names"]
    m = sum(1 for nm in names if nm.startswith("alpha:"))
    p, q = design.X.shape[1], design.S.shape[1]
    kappa = theta[:m] if m else None
    beta = theta[m:m + p]
    tau = theta[m + p:m + p + q]
    lam = (float(theta[-1]) if spec.lambda_free else float(spec.lambda_fixed))
    info = np.asarray(report["observed_information"], dtype=float)
    se = np.array([np.nan if r["std_error"] is None else r["std_error"]
                   for r in report["coefficients"]])
    mu = np.asarray(spec.link_mu.inverse(design.X @ beta), dtype=float)
    sigma = np.asarray(spec.link_sigma.inverse(design.S @ tau), dtype=float)
    discrete = None
    alpha = None
    ll_d = report["fit"]["loglik_discrete"]
    ll_c = report["fit"]["loglik_continuous"]
    if m:
        zero = (y <= 0.0).astype(float)
        alpha = np.clip(np.asarray(spec.link_alpha.inverse(design.Z @ kappa)),
                        1e-12, 1 - 1e-12)
        qw = 1.0 / (alpha * (1.0 - alpha) * spec.link_alpha.deriv(alpha) ** 2)
        information = design.Z.T @ (design.Z * qw[:, None])
        discrete = binglm.BinaryGlmFit(
            kappa=kappa, fitted_alpha=alpha, information=information,
            leverage=np.empty(len(y)), loglik=float(ll_d or 0.0),
            converged=True, iterations=0, gradient_norm=0.0,
            link=spec.link_alpha)
        discrete.leverage = binglm.leverage_hstar(discrete, design.Z)
    conv = report["fit"]["convergence"]
    fit = FittedModel(
        kind=model["kind"], spec=spec, beta=beta, tau=tau, kappa=kappa,
        lam=lam, lambda_free=spec.lambda_free, zeta=model["zeta"],
        loglik=report["fit"]["loglik"], observed_information=info,
        std_errors=se, se_available=bool(np.all(np.isfinite(se))),
        convergence=regress.Convergence(conv["iterations"],
                                        conv["gradient_norm"], conv["status"]),
        fitted_mu=mu, fitted_sigma=sigma, fitted_alpha=alpha,
        param_names=names, n_obs=len(y),
        loglik_discrete=ll_d, loglik_continuous=ll_c, discrete=discrete)
    return fit, y, design


def cmd_diagnose(args) -> int:
    with open(args.fit, encoding="utf-8") as fh:
        fit_report = json.load(fh)
    fit, y, design = _rebuild_fit(fit_report, args.data, args.delimiter)
    prefix = args.out_prefix
    summary = {"schema_version": SCHEMA_VERSION,
               "invocation": list(args.invocation),
               "model": fit_report["model"],
               "seed": args.seed,
               "tables": {}}

    def emit(name: str, header: list[str], rows):
        if prefix:
            path = f"{prefix}_{name}.csv"
            _write_table(path, header, rows)
            summary["tables"][name] = {"path": path, "rows": len(rows)}
        else:
            summary["tables"][name] = {"header": header, "rows": rows}

    kind = args.residuals
    if kind == "randomized" and fit.kind != "zabcs":
        raise DataError("randomized residuals require a zero-adjusted fit")
    if kind:
        if kind == "quantile":
            rs = diagnostics.quantile_residuals(fit, y)
            rows = [[int(i), float(v)] for i, v in zip(rs.index, rs.values)]
            emit("residuals", ["index", "residual"], rows)
        elif kind == "randomized":
            sets = diagnostics.randomized_quantile_residuals(
                fit, y, realizations=args.realizations, seed=args.seed)
            header = ["index"] + [f"realization_{k + 1}" for k in range(len(sets))]
            cols = np.column_stack([s.values for s in sets])
            rows = [[int(i)] + [float(v) for v in cols[i]] for i in range(len(y))]
            emit("residuals", header, rows)
        elif kind == "pearson":
            rs = diagnostics.pearson_residuals(fit, y)
            rows = [[int(i), float(v)] for i, v in zip(rs.index, rs.values)]
            emit("residuals", ["index", "residual"], rows)
        else:
            raise DataError(f"unknown residual kind {kind!r}")
    if args.envelope:
        env = diagnostics.simulated_envelope(fit, y, design,
                                             replicates=args.envelope,
                                             seed=args.seed)
        rows = [[r + 1, float(env.theoretical[r]), float(env.lower[r]),
                 float(env.observed[r]), float(env.upper[r])]
                for r in range(len(env.observed))]
        emit("envelope", ["rank", "theoretical", "lower", "observed", "upper"], rows)
        summary["envelope"] = {"n_outside": env.n_outside,
                               "n_replicates": env.n_replicates,
                               "n_failed": env.n_failed,
                               "outside_fraction": env.n_outside / len(env.observed)}
    if args.influence:
        inf = diagnostics.local_influence(fit, y, design)
        rows = [[int(i), float(abs(inf.dmax[i])), float(inf.ci[i])]
                for i in range(len(y))]
        emit("influence", ["index", "abs_dmax", "c_i"], rows)
        summary["influence"] = {"cdmax": inf.cdmax,
                                "dmax_norm": float(np.linalg.norm(inf.dmax)),
                                "argmax_abs_dmax": int(np.argmax(np.abs(inf.dmax)))}
    _emit_json(summary, args.out)
    return 0


def cmd_select_zeta(args) -> int:
    _dataset, design, spec, y = _load_model_inputs(args)
    grid = _parse_grid(args.zeta_grid)
    best, rows = regress.select_zeta(y, design, spec, grid)
    report = {
        "schema_version": SCHEMA_VERSION,
        "invocation": list(args.invocation),
        "model": _model_section(spec),
        "selected_zeta": best,
        "table": [{"zeta": r.zeta, "loglik": r.loglik, "upsilon": r.upsilon,
                   "status": r.status, "selected": r.selected} for r in rows],
    }
    _emit_json(report, args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.n is not None and args.n <= 0:
        raise DataError("--n must be positive")
    rng_seq = np.random.SeedSequence(args.seed)
    if args.fit:
        with open(args.fit, encoding="utf-8") as fh:
            fit_report = json.load(fh)
        fit, y, design = _rebuild_fit(fit_report, args.data, args.delimiter)
        spec = fit.spec
        truth = fit.theta
        names = fit.param_names

        def draw(rng):
            return diagnostics._simulate_response(fit, rng), design
    else:
        spec, truth, names, design_builder = _flag_truth(args)

        def draw(rng):
            return design_builder(rng)
    if args.replicates <= 1:
        rng = np.random.default_rng(rng_seq)
        y_sim, _ = draw(rng)
        if args.out:
            data.write_csv(args.out, data.dataset_from_columns({"y": y_sim}))
        else:
            writer = csv.writer(sys.stdout)
            writer.writerow(["y"])
            for v in y_sim:
                writer.writerow([repr(float(v))])
        return 0
    return _simulation_study(args, spec, truth, names, draw, rng_seq)


def _flag_truth(args):
    family = _family_from_args(args)
    if args.mu is None or args.sigma is None:
        raise DataError("simulate needs --mu and --sigma (or --fit)")
    lam = args.lam if args.lam is not None else 0.0
    alpha = args.alpha
    n = args.n or 1000
    from .formula import DesignMatrices

    ones = np.ones((n, 1))
    if alpha is not None:
        ast = parse_formula("y ~ 1 | 1 | 1")
        design = DesignMatrices(ones, ones, ones, ["intercept"], ["intercept"],
                                ["intercept"])
    else:
        ast = parse_formula("y ~ 1 | 1")
        design = DesignMatrices(ones, ones, None, ["intercept"], ["intercept"], None)
    spec = ModelSpec(ast, family,
                     link_mu=positive_link(args.link_mu),
                     link_sigma=positive_link(args.link_sigma),
                     link_alpha=probability_link(args.link_alpha),
                     lambda_fixed=args.fix_lambda)
    theta = []
    names = []
    if alpha is not None:
        theta.append(float(spec.link_alpha.apply(alpha)))
        names.append("alpha:intercept")
    theta.append(float(spec.link_mu.apply(args.mu)))
    names.append("mu:intercept")
    theta.append(float(spec.link_sigma.apply(args.sigma)))
    names.append("sigma:intercept")
    if spec.lambda_free:
        theta.append(lam)
        names.append("lambda")
    truth = np.asarray(theta)

    from . import bcs as bcs_mod

    def design_builder(rng):
        if alpha is not None:
            zero = rng.random(n) < alpha
            y = np.zeros(n)
            k = int(np.count_nonzero(~zero))
            if k:
                y[~zero] = bcs_mod.sample_raw(np.full(k, args.mu),
                                              np.full(k, args.sigma),
                                              lam, family, rng)
            return y, design
        y = bcs_mod.sample_raw(np.full(n, args.mu), np.full(n, args.sigma),
                               lam, family, rng)
        return y, design

    return spec, truth, names, design_builder


def _simulation_study(args, spec, truth, names, draw, rng_seq) -> int:
    z975 = sc.ndtri(0.975)
    estimates, covered = [], []
    failures = 0
    children = rng_seq.spawn(args.replicates)
    for child in children:
        rng = np.random.default_rng(child)
        y_sim, design = draw(rng)
        try:
            f = regress.fit(y_sim, design, spec)
            if f.convergence.status != "converged":
                raise ConvergenceError(f.convergence.status)
        except (BcsymError, np.linalg.LinAlgError):
            failures += 1
            continue
        estimates.append(f.theta)
        covered.append(np.abs(f.theta - truth) <= z975 * f.std_errors)
    if not estimates:
        raise ConvergenceError("all simulation replicates failed to fit")
    est = np.vstack(estimates)
    cov = np.vstack(covered)
    table = []
    for j, name in enumerate(names):
        bias = float(np.mean(est[:, j]) - truth[j])
        rmse = float(np.sqrt(np.mean((est[:, j] - truth[j]) ** 2)))
        table.append({"parameter": name, "truth": float(truth[j]),
                      "bias": bias, "rmse": rmse,
                      "coverage_95": float(np.mean(cov[:, j]))})
    report = {
        "schema_version": SCHEMA_VERSION,
        "invocation": list(args.invocation),
        "replicates": args.replicates,
        "replicates_used": len(estimates),
        "failures": failures,
        "parameters": table,
        "seed": args.seed,
    }
    _emit_json(report, args.out)
    return 0


def cmd_gen_data(args) -> int:
    dataset, truth = data.generate_bundled_dataset(args.seed, n=args.n)
    data.write_csv(args.out, dataset)
    truth_path = args.truth_out or (args.out + ".truth.json")
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_sanitize(truth), indent=2) + "\n")
    y = dataset["y"]
    _emit_json({
        "schema_version": SCHEMA_VERSION,
        "invocation": list(args.invocation),
        "path": args.out,
        "truth_path": truth_path,
        "n": dataset.n,
        "zero_fraction": float(np.mean(y == 0.0)),
        "seed": args.seed,
    }, None)
    return 0


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="input CSV (header row required)")
    p.add_argument("--formula", required=True,
                   help='three-part formula, e.g. "y ~ age | 1 | age"')
    p.add_argument("--family", required=True, help="family tag, e.g. BCLOII")
    p.add_argument("--zeta", type=float, default=None,
                   help="extra parameter for families that take one")
    p.add_argument("--zeta-grid", default=None,
                   help="lo:hi:step or comma list; selects zeta before fitting")
    p.add_argument("--fix-lambda", type=float, default=None,
                   help="hold the skewness parameter fixed (0 = log-symmetric)")
    p.add_argument("--link-mu", default="log", help="log | identity | sqrt")
    p.add_argument("--link-sigma", default="log", help="log | identity | sqrt")
    p.add_argument("--link-alpha", default="logit", help="logit | probit | cloglog")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcsym",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model and emit a JSON report")
    _add_model_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_diag = sub.add_parser("diagnose", help="residuals, envelopes, influence")
    p_diag.add_argument("--fit", required=True, help="fit report JSON")
    p_diag.add_argument("--data", default=None,
                        help="override the data path stored in the report")
    p_diag.add_argument("--delimiter", default=None)
    p_diag.add_argument("--residuals", default=None,
                        help="quantile | randomized | pearson")
    p_diag.add_argument("--realizations", type=int, default=4)
    p_diag.add_argument("--envelope", type=int, default=None,
                        help="number of simulated envelope replicates")
    p_diag.add_argument("--influence", action="store_true")
    p_diag.add_argument("--seed", type=int, default=None)
    p_diag.add_argument("--out-prefix", default=None,
                        help="write CSV tables with this path prefix")
    p_diag.add_argument("--out", default=None)
    p_diag.set_defaults(func=cmd_diagnose)

    p_sel = sub.add_parser("select-zeta", help="profile the extra parameter")
    _add_model_flags(p_sel)
    p_sel.set_defaults(func=cmd_select_zeta)

    p_sim = sub.add_parser("simulate",
                           help="simulate data or run a recovery study")
    p_sim.add_argument("--fit", default=None, help="fit report as the generator")
    p_sim.add_argument("--data", default=None)
    p_sim.add_argument("--family", default=None)
    p_sim.add_argument("--zeta", type=float, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--mu", type=float, default=None)
    p_sim.add_argument("--sigma", type=float, default=None)
    p_sim.add_argument("--lam", "--lambda", type=float, default=None, dest="lam")
    p_sim.add_argument("--fix-lambda", type=float, default=None)
    p_sim.add_argument("--link-mu", default="log")
    p_sim.add_argument("--link-sigma", default="log")
    p_sim.add_argument("--link-alpha", default="logit")
    p_sim.add_argument("--delimiter", default=None)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--replicates", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_gen = sub.add_parser("gen-data", help="write the bundled synthetic dataset")
    p_gen.add_argument("--seed", type=int, default=20240101)
    p_gen.add_argument("--n", type=int, default=data.BUNDLED_N)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--truth-out", default=None)
    p_gen.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.invocation = list(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BcsymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
