"""Monte Carlo harness for the size/power studies.

A design bundles a data-generating process with the (possibly deliberately
misspecified) model fitted to it.  Each replication simulates a series,
fits by QML, discards the burn-in residuals, and evaluates the pointwise
and functional extremal-dependence tests plus the Ljung-Box baseline over
a grid of lag horizons and bandwidths.  Replications run on independent
streams derived from ``(master_seed, replication_index)``, so results do
not depend on worker scheduling, and per-replication records can be
checkpointed to a JSONL file and resumed.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dgp, estimation
from .baseline_diagnostics import ljung_box
from .errors import DataError, DegenerateDataError, DomainError, FitError
from .limit_distributions import chi2_quantile, critical_value
from .rng import rng_stream
from .tail_dependence import (
    ResidualSample,
    _functional_statistic,
    default_k,
    lambda_by_lag,
)

__all__ = [
    "ExperimentConfig",
    "RejectionTable",
    "DESIGNS",
    "run_replication",
    "run_experiment",
    "emit_figure_data",
    "load_experiment_config",
]

BURN_IN = 10

# True parameters for the two simulation studies.
APARCH_X_SIZE_PARAMS = dgp.AparchXParams(0.046, 0.027, 0.092, 0.843, pi=0.0, delta=1.0)
APARCH_X_POWER_PARAMS = dgp.AparchXParams(0.046, 0.027, 0.092, 0.843, pi=0.089, delta=1.0)
GARCH_SKEWT_PARAMS = dgp.GarchParams(0.046, 0.127, 0.843)
TV_SKEWT_NULL = dgp.TvSkewTParams(-3.0, 0.0, 0.0, -1.0, 0.0, 0.0)
TV_SKEWT_ALT = dgp.TvSkewTParams(-3.0, -6.0, 0.6, -1.0, -2.0, 0.6)


@dataclass(frozen=True)
class _Design:
    name: str
    fit_model: str
    delta: float
    simulate: object  # callable (rng, n_total) -> series


def _sim_aparch_size(rng, n_total):
    y, _, _ = dgp.simulate_aparch_x(rng, APARCH_X_SIZE_PARAMS, n_total, v=0)
    return y


def _sim_aparch_power(rng, n_total):
    y, _, _ = dgp.simulate_aparch_x(rng, APARCH_X_POWER_PARAMS, n_total, v=0)
    return y


def _sim_skewt_size(rng, n_total):
    y, _, _, _ = dgp.simulate_garch_tvskewt(rng, GARCH_SKEWT_PARAMS, TV_SKEWT_NULL, n_total)
    return y


def _sim_skewt_power(rng, n_total):
    y, _, _, _ = dgp.simulate_garch_tvskewt(rng, GARCH_SKEWT_PARAMS, TV_SKEWT_ALT, n_total)
    return y


DESIGNS = {
    "aparch_x_size": _Design("aparch_x_size", "aparch11", 1.0, _sim_aparch_size),
    "aparch_x_power": _Design("aparch_x_power", "aparch11", 1.0, _sim_aparch_power),
    "garch_skewt_size": _Design("garch_skewt_size", "garch11", 1.0, _sim_skewt_size),
    "garch_skewt_power": _Design("garch_skewt_power", "garch11", 1.0, _sim_skewt_power),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid of one Monte Carlo run."""

    design: str
    n: int
    reps: int
    D_set: tuple = (5,)
    k_set: tuple = None  # explicit bandwidths; overrides rho_set
    rho_set: tuple = None  # bandwidths via floor(rho * n**0.99)
    alpha_set: tuple = (0.10, 0.05, 0.01)
    iota: float = 0.1
    master_seed: int = 1

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise DomainError(f"unknown design '{self.design}'; choose from {sorted(DESIGNS)}")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        for a in self.alpha_set:
            if not 0.0 < a < 1.0:
                raise DomainError("all significance levels must lie in (0, 1)")
        object.__setattr__(self, "D_set", tuple(int(d) for d in self.D_set))
        object.__setattr__(self, "alpha_set", tuple(float(a) for a in self.alpha_set))
        if self.k_set is not None:
            object.__setattr__(self, "k_set", tuple(int(k) for k in self.k_set))
        if self.rho_set is not None:
            object.__setattr__(self, "rho_set", tuple(float(r) for r in self.rho_set))

    def bandwidths(self) -> tuple:
        if self.k_set is not None:
            return self.k_set
        if self.rho_set is not None:
            return tuple(default_k(self.n, rho).k for rho in self.rho_set)
        return (default_k(self.n).k,)


@dataclass
class RejectionTable:
    """Aggregated rejection frequencies keyed by (test, n, D, k, alpha)."""

    cells: dict
    reps: int  # replications entering the frequencies (fit failures excluded)
    failures: int
    config: ExperimentConfig

    def frequency(self, test: str, D: int, k: int, alpha: float) -> float:
        return self.cells[(test, self.config.n, D, k, alpha)]

    def standard_error(self, test: str, D: int, k: int, alpha: float) -> float:
        f = self.frequency(test, D, k, alpha)
        return math.sqrt(f * (1.0 - f) / self.reps) if self.reps else float("nan")


def _critical_values_for(config: ExperimentConfig) -> dict:
    """Resolve all reference quantiles once, outside the worker pool."""
    cvs = {}
    for D in config.D_set:
        for alpha in config.alpha_set:
            cvs[("P", D, alpha)] = chi2_quantile(1.0 - alpha, D)
            cvs[("LB", D, alpha)] = chi2_quantile(1.0 - alpha, D)
            cvs[("F", D, alpha)] = critical_value(D, alpha, config.iota)
    return cvs


def run_replication(design_name: str, n: int, rng, D_set=(5,), k_set=None, iota: float = 0.1):
    """Simulate, fit, and compute all statistics for one replication.

    Returns a JSON-serializable record holding the statistics (or
    ``failed: True`` when the fit did not converge).  Rejection decisions
    are taken at aggregation time from the resolved critical values.
    """
    design = DESIGNS[design_name]
    if k_set is None:
        k_set = (default_k(n).k,)
    y = design.simulate(rng, n + BURN_IN)
    try:
        fit = estimation.qml_fit(y, model=design.fit_model, delta=design.delta, burn_in=BURN_IN)
    except (FitError, DataError):
        return {"failed": True}
    if not fit.converged:
        return {"failed": True}
    sample = estimation.standardized_residuals(fit)
    record = {"failed": False, "P": {}, "F": {}, "LB": {}}
    for D in D_set:
        for k in k_set:
            per_lag = lambda_by_lag(sample, k, D)
            null_value = k / sample.n
            record["P"][f"{D}|{k}"] = sample.n * float(np.sum((per_lag - null_value) ** 2))
            record["F"][f"{D}|{k}"] = _functional_statistic(sample, k, D, iota)
        try:
            record["LB"][str(D)] = ljung_box(
                fit.residuals[BURN_IN:], D, fitted_residuals=True
            ).statistic
        except DegenerateDataError:
            record["LB"][str(D)] = float("nan")
    return record


def _worker(args):
    design_name, n, D_set, k_set, iota, master_seed, rep = args
    rng = rng_stream(master_seed, rep)
    record = run_replication(design_name, n, rng, D_set=D_set, k_set=k_set, iota=iota)
    record["rep"] = rep
    return record


def run_experiment(
    config: ExperimentConfig,
    n_jobs: int = 1,
    checkpoint=None,
    resume: bool = False,
) -> RejectionTable:
    """Run all replications of a design and aggregate rejection frequencies.

    With ``checkpoint`` set, per-replication records are appended to a
    JSONL file as they complete; ``resume=True`` skips replications
    already present in that file.
    """
    k_set = config.bandwidths()
    cvs = _critical_values_for(config)
    records = {}
    if checkpoint is not None and resume and Path(checkpoint).exists():
        with open(checkpoint) as fh:
            for line in fh:
                rec = json.loads(line)
                records[rec["rep"]] = rec
    pending = [r for r in range(config.reps) if r not in records]
    tasks = [
        (config.design, config.n, config.D_set, k_set, config.iota, config.master_seed, rep)
        for rep in pending
    ]
    sink = open(checkpoint, "a") if checkpoint is not None else None
    try:
        if n_jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                for rec in pool.map(_worker, tasks, chunksize=max(1, len(tasks) // (n_jobs * 8))):
                    records[rec["rep"]] = rec
                    if sink is not None:
                        sink.write(json.dumps(rec) + "\n")
                        sink.flush()
        else:
            for task in tasks:
                rec = _worker(task)
                records[rec["rep"]] = rec
                if sink is not None:
                    sink.write(json.dumps(rec) + "\n")
                    sink.flush()
    finally:
        if sink is not None:
            sink.close()

    good = [records[r] for r in sorted(records) if not records[r]["failed"]]
    failures = sum(1 for r in records.values() if r["failed"])
    cells = {}
    for D in config.D_set:
        for k in k_set:
            key = f"{D}|{k}"
            p_stats = np.array([rec["P"][key] for rec in good])
            f_stats = np.array([rec["F"][key] for rec in good])
            lb_stats = np.array([rec["LB"][str(D)] for rec in good])
            for alpha in config.alpha_set:
                cells[("P", config.n, D, k, alpha)] = float(
                    np.mean(p_stats > cvs[("P", D, alpha)])
                )
                cells[("F", config.n, D, k, alpha)] = float(
                    np.mean(f_stats > cvs[("F", D, alpha)])
                )
                cells[("LB", config.n, D, k, alpha)] = float(
                    np.mean(lb_stats > cvs[("LB", D, alpha)])
                )
    return RejectionTable(cells=cells, reps=len(good), failures=failures, config=config)


def emit_figure_data(table: RejectionTable, kind: str, path) -> Path:
    """Write rejection frequencies as long-format CSV for plotting.

    ``kind`` selects the sweep axis: ``rejection_vs_k`` or
    ``rejection_vs_D``.  A metadata comment marks the reference bandwidth
    ``floor(0.11 n**0.99)``; cells missing from the table are emitted as
    ``NA`` gap markers rather than interpolated.
    """
    if kind not in ("rejection_vs_k", "rejection_vs_D"):
        raise DomainError("kind must be 'rejection_vs_k' or 'rejection_vs_D'")
    config = table.config
    k_set = config.bandwidths()
    axis = sorted(set(k_set)) if kind == "rejection_vs_k" else sorted(set(config.D_set))
    fixed = sorted(set(config.D_set)) if kind == "rejection_vs_k" else sorted(set(k_set))
    path = Path(path)
    ref_k = default_k(config.n).k
    with open(path, "w") as fh:
        fh.write(f"# reference_k,n={config.n},k={ref_k}\n")
        fh.write("test,n,k_or_D,alpha,frequency,se\n")
        for test in ("P", "F", "LB"):
            for other in fixed:
                for val in axis:
                    D, k = (other, val) if kind == "rejection_vs_k" else (val, other)
                    for alpha in config.alpha_set:
                        cell = (test, config.n, D, k, alpha)
                        if cell in table.cells:
                            f = table.cells[cell]
                            se = table.standard_error(test, D, k, alpha)
                            fh.write(
                                f"{test},{config.n},{val},{alpha:g},{f:.6g},{se:.6g}\n"
                            )
                        else:
                            fh.write(f"{test},{config.n},{val},{alpha:g},NA,NA\n")
    return path


def load_experiment_config(path) -> ExperimentConfig:
    """Parse the plain-text key=value experiment file."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value, got '{line}'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()

    def int_list(s):
        return tuple(int(v) for v in s.split(",") if v.strip())

    def float_list(s):
        return tuple(float(v) for v in s.split(",") if v.strip())

    try:
        return ExperimentConfig(
            design=values["design"],
            n=int(values["n"]),
            reps=int(values["reps"]),
            D_set=int_list(values.get("D_set", "5")),
            k_set=int_list(values["k_set"]) if "k_set" in values else None,
            rho_set=float_list(values["rho_set"]) if "rho_set" in values else None,
            alpha_set=float_list(values.get("alpha_set", "0.10,0.05,0.01")),
            iota=float(values.get("iota", "0.1")),
            master_seed=int(values.get("master_seed", "1")),
        )
    except KeyError as missing:
        raise DataError(f"experiment config is missing required key {missing}") from None
