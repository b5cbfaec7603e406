"""Residual-based specification tests for conditional location-scale models.

Fit a volatility model, take the absolute standardized residuals, and test
whether any serial *extremal* dependence is left in them.  The test
statistics are pure rank statistics of the residual magnitudes with
nuisance-parameter-free reference laws: chi-square for the pointwise
statistic, an integrated-squared-Brownian-bridge law for the functional
one.  The package also ships the data-generating processes, Monte Carlo
harness and value-at-risk backtesting used to validate the tests.
"""

__version__ = "0.1.0"

from .baseline_diagnostics import AcfEstimate, LjungBoxResult, acf_squared, ljung_box
from .dgp import (
    AparchXParams,
    ArmaGarchParams,
    GarchParams,
    SkewedTParams,
    TvSkewTParams,
    draw_skewed_t,
    draw_std_student_t,
    logistic_map,
    simulate_aparch_x,
    simulate_arma_garch,
    simulate_covariate,
    simulate_garch_tvskewt,
    skewed_t_cdf,
    skewed_t_density,
    skewed_t_ppf,
)
from .errors import (
    CapacityError,
    DataError,
    DegenerateDataError,
    DomainError,
    FitError,
    InvalidBandwidthError,
    InvalidLagError,
    TailspecError,
)
from .estimation import (
    FilterOutput,
    FitResult,
    aparch_filter,
    arma_garch_filter,
    garch_filter,
    qml_fit,
    standardized_residuals,
)
from .experiments import (
    DESIGNS,
    ExperimentConfig,
    RejectionTable,
    emit_figure_data,
    run_experiment,
    run_replication,
)
from .limit_distributions import (
    REFERENCE_CRITICAL_VALUES,
    BridgeSimConfig,
    CriticalValueTable,
    LimitSample,
    chi2_cdf,
    chi2_quantile,
    critical_value,
    critical_value_table,
    limit_p_value,
    simulate_limit,
)
from .rng import rng_stream
from .risk_backtesting import (
    DqResult,
    VarForecastSet,
    dq_test,
    forecast_var,
    residual_var_quantile,
)
from .tail_dependence import (
    Bandwidth,
    ResidualSample,
    TailCopulaCurve,
    TailTestReport,
    default_k,
    dumouchel_k,
    functional_test,
    lambda_by_lag,
    null_confidence_band,
    pointwise_test,
    tail_copula_at,
    tail_copula_curve,
    weighted_functional_test,
)
