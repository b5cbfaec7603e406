"""Command-line surface: file in, files out, no interactive state.

Subcommands
-----------
test      fit a model to a return series and run the residual tests
cv        simulate the functional-limit critical-value table
mc        run a Monte Carlo size/power experiment from a config file
backtest  fit once, forecast value-at-risk out of sample, run the DQ test

Every command is deterministic given its inputs, flags and seed.  Exit
codes: 0 = command ran (whatever the test outcomes), 1 = usage error,
2 = data error, 3 = numerical failure.
"""

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as xp
from . import limit_distributions as ld
from .baseline_diagnostics import ljung_box
from .errors import DataError, DomainError, FitError, TailspecError
from .estimation import qml_fit, standardized_residuals
from .risk_backtesting import dq_test, forecast_var
from .tail_dependence import (
    ResidualSample,
    default_k,
    dumouchel_k,
    functional_test,
    lambda_by_lag,
    null_confidence_band,
    pointwise_test,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise _UsageError(message)


def _read_returns(path, log_returns=False):
    """Load the (date, value) CSV; strictly increasing dates, no gaps."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or len(header) < 2:
                raise DataError(f"{path}: expected a header row with date and value columns")
            prev = None
            for lineno, row in enumerate(reader, start=2):
                if len(row) < 2:
                    raise DataError(f"{path}:{lineno}: expected two columns")
                ds, vs = row[0].strip(), row[1].strip()
                try:
                    d = date.fromisoformat(ds)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad ISO date '{ds}'") from None
                if prev is not None and d <= prev:
                    raise DataError(f"{path}:{lineno}: dates must be strictly increasing")
                prev = d
                if vs == "" or vs.lower() in ("na", "nan"):
                    raise DataError(f"{path}:{lineno}: missing value (gaps are rejected)")
                try:
                    v = float(vs)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad numeric value '{vs}'") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: non-finite value")
                rows.append(v)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    values = np.asarray(rows, dtype=float)
    if log_returns:
        if np.any(values <= 0):
            raise DataError(f"{path}: prices must be positive to take log-returns")
        values = np.diff(np.log(values))
    return values


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _alphas(text):
    alphas = tuple(float(a) for a in text.split(","))
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise _UsageError(f"significance level {a} outside (0, 1)")
    return alphas


def _resolve_k(args, n):
    if args.k is not None:
        return args.k
    if args.dumouchel:
        return dumouchel_k(n).k
    return default_k(n, args.rho).k


def _write_json(report, out):
    text = json.dumps(report, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n")


def _fit_flags(parser):
    parser.add_argument("--model", choices=["aparch11", "garch11", "arma-garch"],
                        default="aparch11")
    parser.add_argument("--delta", type=float, default=1.0,
                        help="fixed power for the aparch11 model (default 1)")
    parser.add_argument("--arma-orders", default="1,1", metavar="P,Q")
    parser.add_argument("--log-returns", action="store_true",
                        help="input holds prices; convert to log-returns first")
    parser.add_argument("--seed", type=int, default=0)


def _do_fit(values, args):
    orders = tuple(int(v) for v in args.arma_orders.split(","))
    model = args.model.replace("-", "_")
    return qml_fit(values, model=model, delta=args.delta, arma_orders=orders, seed=args.seed)


def cmd_test(args) -> int:
    values = _read_returns(args.input, log_returns=args.log_returns)
    if not args.residuals_only and values.size < 200:
        raise DataError(f"need at least 200 observations to fit, have {values.size}")
    alphas = _alphas(args.alpha)
    if args.residuals_only:
        sample = ResidualSample.from_residuals(values)
        fit_block = None
        lb_input = values
    else:
        fit = _do_fit(values, args)
        sample = standardized_residuals(fit)
        lb_input = fit.residuals[fit.burn_in :]
        fit_block = {
            "model": fit.model,
            "converged": fit.converged,
            "loglik": fit.loglik,
            "iterations": fit.iterations,
            "theta_hat": _params_dict(fit),
        }
    k = _resolve_k(args, sample.n)
    pw = pointwise_test(sample, k, D=args.D, alphas=alphas)
    fn = functional_test(sample, k, D=args.D, iota=args.iota, alphas=alphas)
    lb = ljung_box(lb_input, args.D, fitted_residuals=not args.residuals_only)
    report = {
        "tool": "tailspec",
        "version": __version__,
        "command": "test",
        "input_sha256": _digest(args.input),
        "config": {
            "input": str(args.input),
            "model": None if args.residuals_only else args.model,
            "delta": args.delta,
            "arma_orders": args.arma_orders,
            "residuals_only": args.residuals_only,
            "log_returns": args.log_returns,
            "D": args.D,
            "k": k,
            "rho": args.rho,
            "iota": args.iota,
            "alpha": args.alpha,
            "seed": args.seed,
        },
        "n": int(sample.n),
        "fit": fit_block,
        "tests": {
            "pointwise": pw.to_dict(),
            "functional": fn.to_dict(),
            "ljung_box": {
                "statistic": lb.statistic,
                "p_value": lb.p_value,
                "df": lb.df,
                "residual_caveat": lb.residual_caveat,
            },
        },
    }
    _write_json(report, args.out)
    if args.lag_out:
        _write_lag_curve(sample, k, args.D, alphas[min(1, len(alphas) - 1)], args.lag_out)
    if args.k_sweep_out:
        _write_k_sweep(sample, args.D, args.iota, args.k_sweep_out)
    return EXIT_OK


def _params_dict(fit):
    p = fit.params
    if fit.model == "garch11":
        return {"omega": p.omega, "alpha": p.alpha, "beta": p.beta}
    if fit.model == "aparch11":
        return {
            "omega": p.omega,
            "alpha_plus": p.alpha_plus,
            "alpha_minus": p.alpha_minus,
            "beta": p.beta,
            "delta": p.delta,
        }
    return {
        "phi": list(p.phi),
        "theta_ma": list(p.theta_ma),
        "omega": p.garch.omega,
        "alpha": p.garch.alpha,
        "beta": p.garch.beta,
    }


def _write_lag_curve(sample, k, D, alpha, path):
    """Per-lag estimates with the pointwise null band (plot data)."""
    lam = lambda_by_lag(sample, k, D)
    lo, hi = null_confidence_band(sample.n, k, alpha)
    with open(path, "w") as fh:
        fh.write("lag,lambda_hat,null_value,band_lo,band_hi\n")
        for d, value in enumerate(lam, start=1):
            fh.write(f"{d},{value:.6g},{k / sample.n:.6g},{lo:.6g},{hi:.6g}\n")


def _write_k_sweep(sample, D, iota, path):
    """Both statistics as functions of k, with their 5% reference lines."""
    n = sample.n
    ks = sorted({default_k(n, rho).k for rho in np.linspace(0.05, 0.15, 21)})
    cv_p = ld.chi2_quantile(0.95, D)
    cv_f = ld.critical_value(D, 0.05, iota)
    with open(path, "w") as fh:
        fh.write(f"# reference_k,n={n},k={default_k(n).k}\n")
        fh.write("k,pointwise,functional,cv5_pointwise,cv5_functional\n")
        for k in ks:
            pw = pointwise_test(sample, k, D=D)
            fn = functional_test(sample, k, D=D, iota=iota)
            fh.write(f"{k},{pw.statistic:.6g},{fn.statistic:.6g},{cv_p:.6g},{cv_f:.6g}\n")


def cmd_cv(args) -> int:
    if args.reps < 1000:
        raise _UsageError("--reps must be at least 1000")
    alphas = _alphas(args.alpha)
    table = ld.critical_value_table(
        D_max=args.D_max,
        alphas=alphas,
        iota=args.iota,
        bridge_reps=args.reps,
        grid_points=args.grid,
        seed=args.seed,
        n_jobs=args.jobs,
    )
    out = Path(args.out)
    with open(out, "w") as fh:
        fh.write(f"# {table.provenance},iota={args.iota:g}\n")
        fh.write("alpha," + ",".join(f"D{d}" for d in range(1, args.D_max + 1)) + "\n")
        for a in alphas:
            row = ",".join(f"{table.entries[(d, a)]:.6g}" for d in range(1, args.D_max + 1))
            fh.write(f"{a:g},{row}\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_mc(args) -> int:
    config = xp.load_experiment_config(args.config)
    if args.dry_run:
        plan = {
            "design": config.design,
            "n": config.n,
            "reps": config.reps,
            "D_set": list(config.D_set),
            "k_set": list(config.bandwidths()),
            "alpha_set": list(config.alpha_set),
            "iota": config.iota,
            "master_seed": config.master_seed,
        }
        print(json.dumps(plan, indent=2, sort_keys=True))
        return EXIT_OK
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / f"{config.design}_n{config.n}.jsonl"
    table = xp.run_experiment(
        config, n_jobs=args.jobs, checkpoint=checkpoint, resume=args.resume
    )
    summary = {
        "design": config.design,
        "n": config.n,
        "reps_effective": table.reps,
        "failures": table.failures,
        "cells": {
            "|".join(str(v) for v in key): value for key, value in sorted(table.cells.items())
        },
    }
    (out_dir / f"{config.design}_n{config.n}_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    kind = "rejection_vs_k" if len(config.bandwidths()) > 1 else "rejection_vs_D"
    xp.emit_figure_data(table, kind, out_dir / f"{config.design}_n{config.n}_{kind}.csv")
    print(f"wrote results under {out_dir}")
    return EXIT_OK


def cmd_backtest(args) -> int:
    if not 0.5 < args.split < 0.95:
        raise _UsageError("--split must lie in (0.5, 0.95)")
    if not 0.0 < args.theta < 1.0:
        raise _UsageError("--theta must lie in (0, 1)")
    values = _read_returns(args.input, log_returns=args.log_returns)
    n_in = int(round(args.split * values.size))
    if n_in < 200 or values.size - n_in < args.dq_lags + 3:
        raise DataError("sample too short for the requested split")
    fit = _do_fit(values[:n_in], args)
    if not fit.converged:
        raise FitError("in-sample fit did not converge")
    vfs = forecast_var(fit, values[n_in:], args.theta)
    dq = dq_test(vfs, lags=args.dq_lags)
    report = {
        "tool": "tailspec",
        "version": __version__,
        "command": "backtest",
        "input_sha256": _digest(args.input),
        "config": {
            "input": str(args.input),
            "model": args.model,
            "delta": args.delta,
            "arma_orders": args.arma_orders,
            "log_returns": args.log_returns,
            "split": args.split,
            "theta": args.theta,
            "dq_lags": args.dq_lags,
            "seed": args.seed,
        },
        "n_in_sample": n_in,
        "n_out_of_sample": int(values.size - n_in),
        "fit": {
            "model": fit.model,
            "converged": fit.converged,
            "loglik": fit.loglik,
            "theta_hat": _params_dict(fit),
        },
        "var_backtest": {
            "theta": args.theta,
            "hit_count": int(vfs.hits.sum()),
            "hit_frequency": float(vfs.hits.mean()),
            "dq_statistic": dq.statistic,
            "dq_p_value": dq.p_value,
            "dq_df": dq.df,
            "dq_degenerate": dq.degenerate,
        },
    }
    _write_json(report, args.out)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="tailspec", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"tailspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="residual extremal-dependence tests for one series")
    p_test.add_argument("input", help="CSV with header and (date, value) rows")
    _fit_flags(p_test)
    p_test.add_argument("--D", type=int, default=5, help="number of lags (default 5)")
    p_test.add_argument("--k", type=int, default=None, help="explicit tail bandwidth")
    p_test.add_argument("--rho", type=float, default=0.11,
                        help="bandwidth rule k = floor(rho * n**0.99) (default 0.11)")
    p_test.add_argument("--dumouchel", action="store_true", help="use k = floor(0.1 n) instead")
    p_test.add_argument("--iota", type=float, default=0.1)
    p_test.add_argument("--alpha", default="0.10,0.05,0.01")
    p_test.add_argument("--residuals-only", action="store_true",
                        help="input already holds residuals; skip fitting")
    p_test.add_argument("--out", default=None, help="write the JSON report here (default stdout)")
    p_test.add_argument("--lag-out", default=None, help="CSV of per-lag estimates with null band")
    p_test.add_argument("--k-sweep-out", default=None,
                        help="CSV of both statistics as functions of k")
    p_test.set_defaults(func=cmd_test)

    p_cv = sub.add_parser("cv", help="simulate the functional-limit critical values")
    p_cv.add_argument("--D-max", type=int, default=10)
    p_cv.add_argument("--alpha", default="0.10,0.05,0.01")
    p_cv.add_argument("--iota", type=float, default=0.1)
    p_cv.add_argument("--reps", type=int, default=1_000_000,
                      help="Brownian-bridge replications shared across D (default 1e6)")
    p_cv.add_argument("--grid", type=int, default=10_000)
    p_cv.add_argument("--seed", type=int, default=1_234_567)
    p_cv.add_argument("--jobs", type=int, default=1)
    p_cv.add_argument("--out", required=True)
    p_cv.set_defaults(func=cmd_cv)

    p_mc = sub.add_parser("mc", help="Monte Carlo size/power experiment")
    p_mc.add_argument("--config", required=True, help="plain-text key=value experiment file")
    p_mc.add_argument("--out-dir", default="mc_results")
    p_mc.add_argument("--jobs", type=int, default=1)
    p_mc.add_argument("--resume", action="store_true",
                      help="skip replications already in the checkpoint file")
    p_mc.add_argument("--dry-run", action="store_true",
                      help="print the replication plan without computing")
    p_mc.set_defaults(func=cmd_mc)

    p_bt = sub.add_parser("backtest", help="value-at-risk forecasting and DQ backtest")
    p_bt.add_argument("input")
    _fit_flags(p_bt)
    p_bt.add_argument("--split", type=float, default=0.8,
                      help="in-sample fraction (default 0.8)")
    p_bt.add_argument("--theta", type=float, default=0.01, help="VaR level (default 0.01)")
    p_bt.add_argument("--dq-lags", type=int, default=4)
    p_bt.add_argument("--out", default=None)
    p_bt.set_defaults(func=cmd_backtest)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, DomainError, TailspecError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint():  # console-script shim
    raise SystemExit(main())
