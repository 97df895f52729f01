"""LowCon subsampling toolkit (C++ core)."""

from ._core import (
    LowconError,
    condition_number,
    fit_huber_m,
    generate_olhd,
    least_squares,
    leverage_scores,
    lhd_levels,
    mse_decompose,
    results_csv,
    run_simulation,
    select,
    singular_values,
    worst_case_mse,
)

__all__ = [
    "LowconError",
    "condition_number",
    "fit_huber_m",
    "generate_olhd",
    "least_squares",
    "leverage_scores",
    "lhd_levels",
    "mse_decompose",
    "results_csv",
    "run_simulation",
    "select",
    "singular_values",
    "worst_case_mse",
]
