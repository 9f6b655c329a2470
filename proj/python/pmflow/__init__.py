"""Python bindings for the pmflow analytics core."""

from ._pmflow import (
    ConfigError,
    DataError,
    __version__,
    convert_positions,
    decompose,
    inverse_log_odds,
    log_odds,
    measures,
    ols,
    payoff,
    price_impact,
    rolling_correlation,
    rolling_kyle_lambda,
    run_cli,
    simulate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "__version__",
    "convert_positions",
    "decompose",
    "inverse_log_odds",
    "log_odds",
    "measures",
    "ols",
    "payoff",
    "price_impact",
    "rolling_correlation",
    "rolling_kyle_lambda",
    "run_cli",
    "simulate",
]
