#pragma once

#include <optional>
#include <vector>

#include "pmflow/prices.hpp"

namespace pmflow {

struct SignedTrade {
    UnixSeconds timestamp = 0;
    double price = 0.0;
    double shares = 0.0;       ///< whole shares
    double sizeMillions = 0.0; ///< USDC notional in millions
    int direction = 0;         ///< +1 / -1, or 0 before the first price change
    double signedFlow = 0.0;   ///< direction * sizeMillions
};

/// Tick rule: direction is the sign of the price change, carrying the last non-zero direction
/// through unchanged prices. Trades before the first change stay undirected with zero flow.
std::vector<SignedTrade> sign_trades(const std::vector<PricePoint>& prices);

enum class VwapWeight { Shares, Notional };

struct HourBar {
    UnixSeconds hour = 0;
    double vwap = 0.0;
    double netFlow = 0.0; ///< million USD, signed
    std::size_t tradeCount = 0;
    bool carriedForward = false;
};

/// Dense hourly bars from the first to the last trade's hour; empty hours repeat the previous
/// VWAP with zero flow.
std::vector<HourBar> hourly_bars(const std::vector<SignedTrade>& trades, VwapWeight weight = VwapWeight::Shares);

inline constexpr double kDefaultClampEpsilon = 1e-6;

struct LogOdds {
    double theta = 0.0;
    bool clamped = false;
};

/// ln(p / (1 - p)) with p clamped into [eps, 1 - eps].
LogOdds log_odds(double p, double eps = kDefaultClampEpsilon);
double inverse_log_odds(double theta);

struct BarIncrement {
    UnixSeconds hour = 0;
    double dTheta = 0.0;
    double flow = 0.0;
};

/// Delta log-odds of each bar relative to the previous one, paired with the bar's flow.
std::vector<BarIncrement> log_odds_increments(const std::vector<HourBar>& bars, double eps = kDefaultClampEpsilon,
                                              std::size_t* clampedCount = nullptr);

struct LambdaEstimate {
    UnixSeconds date = 0;
    std::optional<double> lambda;         ///< empty for degenerate windows (all flow zero)
    std::optional<double> standardError;
    std::size_t windowHours = 0;
    std::size_t observations = 0;
};

struct LambdaOptions {
    std::size_t windowHours = 720;
    UnixSeconds step = kSecondsPerDay;
};

/// For each UTC day T, no-intercept OLS of dTheta on flow over the hours [T - window, T - 1].
/// Estimation starts only once a full window of increments exists.
std::vector<LambdaEstimate> rolling_kyle_lambda(const std::vector<BarIncrement>& increments,
                                                const LambdaOptions& options = {});

struct NoInterceptFit {
    std::optional<double> slope;
    std::optional<double> standardError;
};

/// slope = sum(x*y) / sum(x^2); se from residual variance with n - 1 degrees of freedom.
NoInterceptFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y);

/// p(1 - p) * lambda * q
double price_impact_delta_p(double lambda, double p, double q);

struct RegressionResult {
    double slope = 0.0;
    std::optional<double> intercept;
    double slopeT = 0.0;
    std::optional<double> interceptT;
    double r2 = 0.0;
    double adjustedR2 = 0.0;
    std::size_t n = 0;
};

class RegressionError : public Error {
public:
    using Error::Error;
};

/// OLS of y on x. Without an intercept R^2 is the uncentered one.
RegressionResult ols(const std::vector<double>& x, const std::vector<double>& y, bool withIntercept = true);

struct DatedValue {
    UnixSeconds date = 0;
    double value = 0.0;
};

/// Regresses lambda on average volume over the dates present in both series.
RegressionResult lambda_volume_regression(const std::vector<LambdaEstimate>& lambdas,
                                          const std::vector<DatedValue>& volumes, bool withIntercept = true);

/// Trailing arithmetic mean over `windowDays`, emitted from the first full window on.
std::vector<DatedValue> rolling_avg_volume(const std::vector<DatedValue>& daily, std::size_t windowDays = 30);

} // namespace pmflow
