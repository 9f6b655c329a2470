#include "pmflow/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pmflow {

std::vector<SignedTrade> sign_trades(const std::vector<PricePoint>& prices) {
    std::vector<SignedTrade> out;
    out.reserve(prices.size());
    int last = 0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const PricePoint& p = prices[i];
        if (i > 0 && p.timestamp < prices[i - 1].timestamp) throw std::invalid_argument("price series is not chronological");
        if (p.shares <= 0) throw std::invalid_argument("trade size must be positive");
        if (i > 0) {
            const Rational& prev = prices[i - 1].price;
            if (p.price > prev)
                last = 1;
            else if (p.price < prev)
                last = -1;
        }
        SignedTrade t;
        t.timestamp = p.timestamp;
        t.price = p.price.value();
        t.shares = static_cast<double>(p.shares) / kMicroPerUnit;
        t.sizeMillions = static_cast<double>(p.usdc) / (static_cast<double>(kMicroPerUnit) * 1e6);
        t.direction = last;
        t.signedFlow = last * t.sizeMillions;
        out.push_back(t);
    }
    return out;
}

std::vector<HourBar> hourly_bars(const std::vector<SignedTrade>& trades, VwapWeight weight) {
    std::vector<HourBar> out;
    if (trades.empty()) return out;
    const UnixSeconds first = floor_hour(trades.front().timestamp);
    const UnixSeconds last = floor_hour(trades.back().timestamp);
    const std::size_t n = static_cast<std::size_t>((last - first) / kSecondsPerHour) + 1;
    std::vector<double> weighted(n, 0.0), weights(n, 0.0);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i].hour = first + static_cast<UnixSeconds>(i) * kSecondsPerHour;
    for (const auto& t : trades) {
        const auto idx = static_cast<std::size_t>((floor_hour(t.timestamp) - first) / kSecondsPerHour);
        const double w = weight == VwapWeight::Shares ? t.shares : t.sizeMillions;
        weighted[idx] += w * t.price;
        weights[idx] += w;
        out[idx].netFlow += t.signedFlow;
        ++out[idx].tradeCount;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (out[i].tradeCount == 0 || weights[i] <= 0.0) {
            // Only reachable for i > 0: the first hour holds the first trade.
            out[i].vwap = i > 0 ? out[i - 1].vwap : 0.0;
            out[i].carriedForward = out[i].tradeCount == 0;
            if (out[i].tradeCount == 0) out[i].netFlow = 0.0;
        } else {
            out[i].vwap = weighted[i] / weights[i];
        }
    }
    return out;
}

LogOdds log_odds(double p, double eps) {
    LogOdds out;
    double q = p;
    if (!(q >= eps)) {
        q = eps;
        out.clamped = true;
    } else if (q > 1.0 - eps) {
        q = 1.0 - eps;
        out.clamped = true;
    }
    out.theta = std::log(q / (1.0 - q));
    return out;
}

double inverse_log_odds(double theta) {
    if (theta >= 0) return 1.0 / (1.0 + std::exp(-theta));
    const double e = std::exp(theta);
    return e / (1.0 + e);
}

std::vector<BarIncrement> log_odds_increments(const std::vector<HourBar>& bars, double eps, std::size_t* clampedCount) {
    std::vector<BarIncrement> out;
    std::size_t clamped = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const LogOdds lo = log_odds(bars[i].vwap, eps);
        if (lo.clamped) ++clamped;
        if (i > 0) out.push_back({bars[i].hour, lo.theta - prev, bars[i].netFlow});
        prev = lo.theta;
    }
    if (clampedCount) *clampedCount = clamped;
    return out;
}

NoInterceptFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    NoInterceptFit fit;
    if (sxx == 0.0 || x.size() < 2) return fit;
    const double slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - slope * x[i];
        rss += r * r;
    }
    fit.slope = slope;
    fit.standardError = std::sqrt(rss / static_cast<double>(x.size() - 1) / sxx);
    return fit;
}

std::vector<LambdaEstimate> rolling_kyle_lambda(const std::vector<BarIncrement>& increments,
                                                const LambdaOptions& options) {
    if (options.windowHours < 2) throw std::invalid_argument("window must cover at least 2 hours");
    if (options.step <= 0) throw std::invalid_argument("step must be positive");
    std::vector<LambdaEstimate> out;
    if (increments.size() < options.windowHours) return out;
    const UnixSeconds h0 = increments.front().hour;
    for (std::size_t i = 0; i < increments.size(); ++i)
        if (increments[i].hour != h0 + static_cast<UnixSeconds>(i) * kSecondsPerHour)
            throw std::invalid_argument("increments must form a dense hourly series");
    const UnixSeconds lastHour = increments.back().hour;
    const UnixSeconds window = static_cast<UnixSeconds>(options.windowHours) * kSecondsPerHour;
    UnixSeconds first = floor_day(h0 + window);
    if (first < h0 + window) first += kSecondsPerDay;

    std::vector<double> x(options.windowHours), y(options.windowHours);
    for (UnixSeconds T = first; T - kSecondsPerHour <= lastHour; T += options.step) {
        const auto begin = static_cast<std::size_t>((T - window - h0) / kSecondsPerHour);
        for (std::size_t k = 0; k < options.windowHours; ++k) {
            x[k] = increments[begin + k].flow;
            y[k] = increments[begin + k].dTheta;
        }
        const NoInterceptFit fit = fit_through_origin(x, y);
        out.push_back({T, fit.slope, fit.standardError, options.windowHours, options.windowHours});
    }
    return out;
}

double price_impact_delta_p(double lambda, double p, double q) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("price must lie in (0, 1)");
    return p * (1.0 - p) * lambda * q;
}

RegressionResult ols(const std::vector<double>& x, const std::vector<double>& y, bool withIntercept) {
    if (x.size() != y.size()) throw RegressionError("x and y differ in length");
    const std::size_t n = x.size();
    const std::size_t k = withIntercept ? 2 : 1;
    if (n < 3 || n <= k) throw RegressionError("regression needs at least 3 observations");
    RegressionResult r;
    r.n = n;
    double mx = 0, my = 0;
    if (withIntercept) {
        for (std::size_t i = 0; i < n; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const bool constantX = std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
    if (sxx == 0.0 || (withIntercept && constantX)) throw RegressionError("regressor is constant or collinear");
    r.slope = sxy / sxx;
    const double a = my - r.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (withIntercept ? a : 0.0) - r.slope * x[i];
        rss += e * e;
    }
    const double dof = static_cast<double>(n - k);
    const double s2 = rss / dof;
    r.slopeT = r.slope / std::sqrt(s2 / sxx);
    if (withIntercept) {
        r.intercept = a;
        double sumX2 = 0;
        for (double v : x) sumX2 += v * v;
        r.interceptT = a / std::sqrt(s2 * sumX2 / (static_cast<double>(n) * sxx));
    }
    r.r2 = syy > 0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 0.0;
    r.adjustedR2 = 1.0 - (1.0 - r.r2) * (static_cast<double>(n) - (withIntercept ? 1.0 : 0.0)) / dof;
    return r;
}

RegressionResult lambda_volume_regression(const std::vector<LambdaEstimate>& lambdas,
                                          const std::vector<DatedValue>& volumes, bool withIntercept) {
    std::map<UnixSeconds, double> v;
    for (const auto& d : volumes) v[d.date] = d.value;
    std::vector<double> x, y;
    for (const auto& l : lambdas) {
        if (!l.lambda) continue;
        auto it = v.find(l.date);
        if (it == v.end()) continue;
        x.push_back(it->second);
        y.push_back(*l.lambda);
    }
    return ols(x, y, withIntercept);
}

std::vector<DatedValue> rolling_avg_volume(const std::vector<DatedValue>& daily, std::size_t windowDays) {
    if (windowDays == 0) throw std::invalid_argument("window must be positive");
    std::vector<DatedValue> out;
    for (std::size_t i = 1; i < daily.size(); ++i)
        if (daily[i].date != daily[i - 1].date + kSecondsPerDay)
            throw std::invalid_argument("daily volume series must be dense");
    for (std::size_t end = windowDays - 1; end < daily.size(); ++end) {
        double sum = 0;
        for (std::size_t i = end + 1 - windowDays; i <= end; ++i) sum += daily[i].value;
        out.push_back({daily[end].date, sum / static_cast<double>(windowDays)});
    }
    return out;
}

} // namespace pmflow
