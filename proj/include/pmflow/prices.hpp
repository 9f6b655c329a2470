#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmflow/decompose.hpp"

namespace pmflow {

/// USDC amount over share amount, both in micro units. Denominator is positive.
struct Rational {
    Micro num = 0;
    Micro den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
};

struct PricePoint {
    UnixSeconds timestamp = 0;
    Rational price;
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    Micro shares = 0; ///< size in micro-shares
    Micro usdc = 0;   ///< notional in micro-USDC
};

struct PriceSeries {
    std::string token;
    std::vector<PricePoint> points;
    std::size_t skippedZeroShares = 0;
    /// Prices outside the open interval (0, 1).
    std::size_t rejectedOutOfRange = 0;
};

/// One point per transaction touching `token`. The price comes from the aggregate fill (taker is
/// an exchange contract, or the maker is the counterparty of every other fill) when present, else
/// from the summed USDC and share amounts of the token's fills.
PriceSeries build_price_series(const std::vector<Transaction>& txs, const std::string& token,
                               const std::set<std::string>& exchangeAddresses);

struct DeviationPoint {
    UnixSeconds timestamp = 0;
    double delta = 0.0; ///< pYes + pNo - 1
    UnixSeconds yesStaleness = 0;
    UnixSeconds noStaleness = 0;
};

/// Samples both legs on a grid using the last observed trade price of each. The grid starts at
/// the later first observation and ends at the latest observation of either leg.
std::vector<DeviationPoint> arbitrage_deviation(const std::vector<PricePoint>& yes, const std::vector<PricePoint>& no,
                                                UnixSeconds gridStep);

struct InflowPoint {
    UnixSeconds day = 0;
    Micro netInflow = 0;
    bool operator==(const InflowPoint&) const = default;
};

/// Dense daily net inflow of one side of `market` over [from, to).
std::vector<InflowPoint> daily_net_inflow(const std::vector<DecomposedTx>& rows, const std::string& market, Side side,
                                          UnixSeconds from, UnixSeconds to);

/// Days before `spliceDay` come from `before`, days on or after from `after`.
std::vector<InflowPoint> splice_inflow_series(const std::vector<InflowPoint>& before,
                                              const std::vector<InflowPoint>& after, UnixSeconds spliceDay);

struct CorrelationPoint {
    UnixSeconds day = 0;           ///< last day of the window
    std::optional<double> value;   ///< empty when either leg has zero variance in the window
};

/// Trailing-window Pearson correlation of two day-aligned series.
std::vector<CorrelationPoint> rolling_correlation(const std::vector<InflowPoint>& a, const std::vector<InflowPoint>& b,
                                                  std::size_t windowDays = 90, std::size_t stepDays = 1);

/// Same computation over raw, already aligned values; `days` labels each index.
std::vector<CorrelationPoint> rolling_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                                  const std::vector<UnixSeconds>& days, std::size_t windowDays,
                                                  std::size_t stepDays);

} // namespace pmflow
