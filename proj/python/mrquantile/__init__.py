"""Robust two-sample Mendelian randomization by weighted quantile regression."""

from ._core import (
    AldFit,
    AldParams,
    HarmonizedSet,
    InstrumentRecord,
    MrqError,
    OutcomeType,
    RatioSet,
    StrongSimConfig,
    WeakSimConfig,
    ald_logpdf,
    check_loss,
    compute_ratios,
    estimate,
    fit_ald,
    fit_mr_quantile,
    generate_strong,
    generate_weak,
    load_and_harmonize,
    log_likelihood,
    make_harmonized,
    median_weights,
    quantile_weights,
    run_study,
    tau_from_score,
    update_lambda,
    update_tau,
    weighted_quantile,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
