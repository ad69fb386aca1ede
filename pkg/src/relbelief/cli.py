"""Command-line interface: ``relbelief <family> <action> [options]``.

Exit status is 0 when everything requested succeeded and met its
tolerances, 1 on a numeric mismatch (a failing table cell or a theorem
violation) and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import config as cfg
from .binomial import BetaBinomial
from .design import DesignSpec, find_min_n
from .locnorm import LocationNormal, baseline_bias_against_pred, baseline_bias_favor_pred
from .oracle import verify_suite
from .quantile import NormalGammaQuantile
from .regpred import RegressionPredictor
from .repro import TABLES, repro

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "chunks": 1,
    "jobs": 1,
    "format": "csv",
    "n": 10,
    "sigma0": 1.0,
    "mu0": 0.0,
    "tau0": 1.0,
    "tau0sq": 1.0,
    "mu_star": 0.0,
    "eta0": 1.0,
    "gamma": 0.95,
    "c": 5.0,
    "grid": 2001,
    "posterior_draws": 10**4,
    "prior_draws": 10**6,
    "bayes_reps": 5000,
}


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps unset flags out of the namespace, so file values and
    # defaults can fill them in later and flags work before or after the action.
    g = p.add_argument_group("common options")
    g.add_argument("--config", default=argparse.SUPPRESS, help="key = value file; flags override it")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (default $RELBELIEF_SEED or 0)")
    g.add_argument("--chunks", type=int, default=argparse.SUPPRESS, help="Monte Carlo chunks")
    g.add_argument("--reps", type=int, default=argparse.SUPPRESS, help="Monte Carlo replicates")
    g.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker threads")
    g.add_argument("--format", choices=cfg.FORMATS, default=argparse.SUPPRESS)
    g.add_argument("--json", dest="format", action="store_const", const="json", default=argparse.SUPPRESS)
    g.add_argument("--csv", dest="format", action="store_const", const="csv", default=argparse.SUPPRESS)


def _opt(p, name, type_=float, **kw):
    p.add_argument(name, type=type_, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relbelief", description="Bias against and in favor for relative belief inferences.")
    _add_common(parser)
    sub = parser.add_subparsers(dest="family", required=True)

    loc = sub.add_parser("locnorm", help="normal location model, normal prior")
    _add_common(loc)
    loc.add_argument("action", choices=("bias-against", "bias-favor", "estimate", "predict"))
    for name in ("--n",):
        _opt(loc, name, int)
    for name in ("--sigma0", "--mu0", "--tau0", "--mu-star", "--delta", "--xbar", "--y"):
        _opt(loc, name)
    loc.add_argument("--sweep", default=argparse.SUPPRESS, metavar="LO:HI:COUNT", help="emit mu,value rows over a grid of mu_star")

    binom = sub.add_parser("binomial", help="Bernoulli model, beta prior")
    _add_common(binom)
    binom.add_argument("action", choices=("bias-against", "bias-favor"))
    _opt(binom, "--n", int)
    _opt(binom, "--grid", int)
    for name in ("--alpha0", "--beta0", "--delta"):
        _opt(binom, name)

    q = sub.add_parser("quantile", help="normal quantile, normal-gamma prior")
    _add_common(q)
    q.add_argument("action", choices=("coverage", "bias-favor"))
    for name in ("--n", "--posterior-draws", "--prior-draws", "--bayes-reps"):
        _opt(q, name, int)
    for name in ("--gamma", "--mu0", "--tau0sq", "--alpha0", "--beta0", "--delta", "--c", "--bin-width"):
        _opt(q, name)

    reg = sub.add_parser("regpred", help="prediction in normal linear regression")
    _add_common(reg)
    reg.add_argument("action", choices=("bias-against", "bias-favor"))
    _opt(reg, "--design", str, help="headerless numeric CSV, one row per observation")
    _opt(reg, "--beta0", str, dest="beta0_csv", help="headerless CSV of the prior mean")
    _opt(reg, "--sigma0", str, dest="sigma0_csv", help="headerless CSV of the prior scale matrix")
    _opt(reg, "--w", str, help="headerless CSV of the new covariates")
    for name in ("--alpha0", "--eta0", "--ynew", "--delta"):
        _opt(reg, name)

    orc = sub.add_parser("oracle", help="check the optimality theorems on random finite models")
    _add_common(orc)
    orc.add_argument("action", choices=("verify",))
    _opt(orc, "--theorems", str, help="comma-separated subset of 1,2,3,4,5")
    _opt(orc, "--models", int)
    _opt(orc, "--trials", int)

    des = sub.add_parser("design", help="smallest n meeting bias thresholds")
    _add_common(des)
    des.add_argument("action", choices=("solve",))
    _opt(des, "--family", str, dest="design_family", choices=("locnorm", "binomial"))
    _opt(des, "--mode", str, choices=("max", "pointwise"))
    _opt(des, "--n-max", int)
    _opt(des, "--grid", int, dest="design_grid")
    for name in ("--max-against", "--max-favor", "--delta", "--sigma0", "--mu0", "--tau0", "--mu-star", "--alpha0", "--beta0", "--theta"):
        _opt(des, name)

    rep = sub.add_parser("repro", help="regenerate a reference table and compare")
    _add_common(rep)
    rep.add_argument("table", choices=TABLES + ("all",), type=str.upper)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    given = vars(args).copy()
    family = given.pop("family")
    values = dict(DEFAULTS)
    env = os.environ.get("RELBELIEF_SEED")
    if env is not None:
        try:
            values["seed"] = int(env)
        except ValueError:
            raise UsageError(f"RELBELIEF_SEED must be an integer, got {env!r}") from None
    if "config" in given:
        with open(given.pop("config")) as fh:
            from_file = cfg.parse_config(fh).values
        if "family" in from_file:
            from_file["design_family"] = from_file.pop("family")
        values.update(from_file)
    values.update(given)
    values["family"] = family
    for key in ("seed", "chunks", "jobs", "reps", "n", "grid"):
        if key in values and values[key] is not None and values[key] < (0 if key == "seed" else 1):
            raise UsageError(f"--{key} must be positive")
    return values


def _need(values, *keys):
    missing = [k for k in keys if values.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _write(payload, fmt, out) -> None:
    out.write(cfg.emit_report(payload, fmt).decode())


# ---- handlers -------------------------------------------------------------


def _sweep(spec: str) -> np.ndarray:
    try:
        lo, hi, count = spec.split(":")
        return np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise UsageError(f"--sweep expects LO:HI:COUNT, got {spec!r}") from None


def run_locnorm(o, out):
    model = LocationNormal(n=o["n"], sigma0=o["sigma0"], mu0=o["mu0"], tau0=o["tau0"])
    action, mu_star = o["action"], o["mu_star"]
    if "sweep" in o:
        mus = _sweep(o["sweep"])
        if action == "bias-against":
            vals = model.bias_against(mus)
        elif action == "bias-favor":
            _need(o, "delta")
            vals = model.bias_favor_delta(mus, o["delta"])
        else:
            raise UsageError("--sweep applies to bias-against and bias-favor")
        _write([{"mu": float(m), "value": float(v)} for m, v in zip(mus, vals)], o["format"], out)
        return EXIT_OK
    if action == "bias-against":
        mu_max, worst = model.max_bias_against()
        rows = [
            {"quantity": "bias_against", "mu": mu_star, "value": float(model.bias_against(mu_star)), "method": "closed-form"},
            {"quantity": "avg_bias_against", "mu": None, "value": model.avg_bias_against(), "method": "quadrature"},
            {"quantity": "max_bias_against", "mu": mu_max, "value": worst, "method": "closed-form+search"},
        ]
    elif action == "bias-favor":
        rows = [{"quantity": "bias_favor_prior", "mu": mu_star, "value": model.bias_favor_unconditional(mu_star), "method": "quadrature"}]
        if o.get("delta") is not None:
            d = o["delta"]
            rows.append({"quantity": "bias_favor_delta", "mu": mu_star, "value": float(model.bias_favor_delta(mu_star, d)), "method": "closed-form"})
            rows.append({"quantity": "avg_bias_favor", "mu": None, "value": model.avg_bias_favor(d), "method": "quadrature"})
    elif action == "estimate":
        _need(o, "xbar")
        model.fit(np.full(o["n"], o["xbar"]))
        lo, hi = model.plausible_interval()
        half, cover = model.expected_halfwidth_and_coverage()
        diff, verdict, _ = model.pvalue_diff_evidence(mu_star)
        rows = [
            {"quantity": "rb", "value": float(model.relative_belief(mu_star)), "note": str(model.predict(mu_star)[0])},
            {"quantity": "pvalue_difference", "value": diff, "note": getattr(verdict, "value", verdict)},
            {"quantity": "plausible_lo", "value": lo, "note": ""},
            {"quantity": "plausible_hi", "value": hi, "note": ""},
            {"quantity": "expected_halfwidth", "value": half, "note": ""},
            {"quantity": "coverage", "value": cover, "note": ""},
        ]
    else:
        y = o.get("y", o["mu0"])
        setup = model.prediction_setup(y, o.get("delta") or 0.0)
        rows = [
            {"quantity": "bias_against_pred", "value": model.bias_against_pred(y), "method": "closed-form"},
            {"quantity": "baseline_bias_against_pred", "value": baseline_bias_against_pred(setup), "method": "closed-form"},
        ]
        if o.get("delta"):
            rows.append({"quantity": "bias_favor_pred", "value": model.bias_favor_pred(y, o["delta"]), "method": "closed-form"})
            rows.append({"quantity": "baseline_bias_favor_pred", "value": baseline_bias_favor_pred(setup), "method": "closed-form"})
    _write(rows, o["format"], out)
    return EXIT_OK


def run_binomial(o, out):
    model = BetaBinomial(n=o["n"], alpha0=o.get("alpha0", 1.0), beta0=float(o.get("beta0", 1.0)))
    if o["action"] == "bias-against":
        curve = model.bias_against_curve(o["grid"])
    else:
        _need(o, "delta")
        curve = model.bias_favor_curve(o["delta"], o["grid"])
    if o["format"] == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["theta", "value"])
        for t, val in zip(curve.theta, curve.values):
            w.writerow([repr(float(t)), repr(float(val))])
        w.writerow(["max", repr(curve.theta_max), repr(curve.max)])
        w.writerow(["avg", repr(curve.average)])
        return EXIT_OK
    payload = {"theta_max": curve.theta_max, "max": curve.max, "average": curve.average}
    if o["format"] == "json":
        payload["theta"] = curve.theta
        payload["values"] = curve.values
    _write(payload, o["format"], out)
    return EXIT_OK


def run_quantile(o, out):
    model = NormalGammaQuantile(mu0=o["mu0"], tau0_sq=o["tau0sq"], alpha0=o.get("alpha0", 2.0), beta0=float(o.get("beta0", 1.0)), n=o["n"], gamma=o["gamma"])
    common = dict(seed=o["seed"], posterior_draws=o["posterior_draws"], prior_draws=o["prior_draws"], n_jobs=o["jobs"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if o["action"] == "coverage":
            rep = model.coverage(delta=o.get("delta", 0.1), c=o["c"], reps=o.get("reps", 1000), bayes_reps=o["bayes_reps"], **common)
            payload = {
                "frequentist": rep.frequentist,
                "frequentist_stderr": rep.worst.stderr,
                "psi_at_max": rep.worst.details["psi"],
                "bayesian": rep.bayesian,
                "bayesian_stderr": rep.average.stderr,
            }
        else:
            _need(o, "delta")
            rep = model.avg_bias_favor_mc(o["delta"], grid_delta=o.get("bin_width", 0.1), c=o["c"], reps=o.get("reps", 200), **common)
            payload = {"avg_bias_favor": rep.value, "stderr": rep.stderr, "bins": rep.details["bins"]}
    _write(payload, o["format"], out)
    return EXIT_OK


def _read_matrix(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read numeric CSV {path!r}: {exc}") from None


def run_regpred(o, out):
    _need(o, "design", "ynew")
    X = _read_matrix(o["design"])
    k = X.shape[1]
    beta0 = _read_matrix(o["beta0_csv"]).ravel() if o.get("beta0_csv") else np.zeros(k)
    Sigma0 = _read_matrix(o["sigma0_csv"]) if o.get("sigma0_csv") else np.eye(k)
    w = _read_matrix(o["w"]).ravel() if o.get("w") else np.ones(k)
    model = RegressionPredictor(beta0=beta0, Sigma0=Sigma0, alpha0=o.get("alpha0", 2.0), eta0=o["eta0"], w=w).fit(X)
    kw = dict(reps=o.get("reps", 10**4), seed=o["seed"], chunks=o["chunks"], n_jobs=o["jobs"])
    if o["action"] == "bias-against":
        rep = model.bias_against_pred_mc(o["ynew"], **kw)
    else:
        _need(o, "delta")
        rep = model.bias_favor_pred_mc(o["ynew"], o["delta"], **kw)
    _write(rep.as_dict(), o["format"], out)
    return EXIT_OK


def run_oracle(o, out):
    try:
        theorems = tuple(int(t) for t in str(o.get("theorems", "1,2,3,4,5")).split(","))
    except ValueError:
        raise UsageError("--theorems expects a comma-separated list such as 1,2,3") from None
    if not set(theorems) <= {1, 2, 3, 4, 5}:
        raise UsageError("theorems are numbered 1 to 5")
    report = verify_suite(o.get("models", 100), o["seed"], theorems, trials=o.get("trials", 200))
    if o["format"] == "json":
        out.write(json.dumps(report, indent=2) + "\n")
    else:
        rows = [{"check": k, "instances": r["instances"], "violations": r["violations"]} for k, r in report["results"].items()]
        _write(rows, o["format"], out)
    bad = any(r["violations"] for r in report["results"].values())
    return EXIT_MISMATCH if bad else EXIT_OK


def run_design(o, out):
    family = o.get("design_family", "locnorm")
    if family == "locnorm":
        params = {"sigma0": o["sigma0"], "mu0": o["mu0"], "tau0": o["tau0"]}
        target = o["mu_star"]
    elif family == "binomial":
        params = {"alpha0": o.get("alpha0", 1.0), "beta0": float(o.get("beta0", 1.0))}
        target = o.get("theta", 0.5)
    else:
        raise UsageError("--family must be locnorm or binomial")
    spec = DesignSpec(
        family,
        params,
        target=target,
        delta=o.get("delta", 0.5),
        max_against=o.get("max_against"),
        max_favor=o.get("max_favor"),
        n_max=o.get("n_max", 10_000),
        mode=o.get("mode", "max"),
        grid=o.get("design_grid", 401),
    )
    res = find_min_n(spec)
    payload = {"family": family, "n": res.n, "attainable": res.attainable, "bias_against": res.bias_against, "bias_favor": res.bias_favor, "evaluations": res.evaluations}
    _write(payload, o["format"], out)
    return EXIT_OK


def run_repro(o, out):
    ids = TABLES if o["table"] == "ALL" else (o["table"],)
    status = EXIT_OK
    for i, table_id in enumerate(ids):
        art = repro(table_id, o["seed"], n_jobs=o["jobs"])
        if o["format"] == "json":
            out.write(json.dumps({"table": table_id, "caption": art.caption, "cells": art.rows()}, indent=2) + "\n")
        elif o["format"] == "csv":
            out.write(art.to_csv() if i == 0 else art.to_csv().split("\n", 1)[1])
        else:
            _write(art.rows(), "text", out)
        if art.failures:
            status = EXIT_MISMATCH
            for c in art.failures:
                print(f"{table_id} {c.row_key} {c.col_key}: {c.value:.4f} vs {c.reference} (tolerance {c.tolerance})", file=sys.stderr)
    return status


HANDLERS = {
    "locnorm": run_locnorm,
    "binomial": run_binomial,
    "quantile": run_quantile,
    "regpred": run_regpred,
    "oracle": run_oracle,
    "design": run_design,
    "repro": run_repro,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        family = args.family
        opts = _resolve(args)
        return HANDLERS[family](opts, out)
    except BrokenPipeError:
        # downstream reader (e.g. `head`) closed early; stop quietly
        sys.stderr.close()
        return EXIT_OK
    except (UsageError, cfg.ConfigError, OSError) as exc:
        print(f"relbelief: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"relbelief: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
