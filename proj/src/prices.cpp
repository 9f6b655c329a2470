#include "pmflow/prices.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmflow/metrics.hpp"

namespace pmflow {

namespace {

const FillEvent* aggregate_fill(const Transaction& tx, const std::vector<const FillEvent*>& tokenFills,
                                const std::set<std::string>& exchangeAddresses) {
    for (const FillEvent* f : tokenFills)
        if (exchangeAddresses.count(f->taker)) return f;
    if (tx.fills.size() < 2) return nullptr;
    for (const FillEvent* f : tokenFills) {
        const bool counterpartyOfAll = std::all_of(tx.fills.begin(), tx.fills.end(), [&](const FillEvent& g) {
            return &g == f || g.taker == f->maker;
        });
        if (counterpartyOfAll) return f;
    }
    return nullptr;
}

} // namespace

PriceSeries build_price_series(const std::vector<Transaction>& txs, const std::string& token,
                               const std::set<std::string>& exchangeAddresses) {
    PriceSeries out;
    out.token = token;
    for (const auto& tx : txs) {
        std::vector<const FillEvent*> tokenFills;
        for (const auto& f : tx.fills)
            if (f.token_id() == token) tokenFills.push_back(&f);
        if (tokenFills.empty()) continue;
        Micro usdc = 0;
        Micro shares = 0;
        if (const FillEvent* agg = aggregate_fill(tx, tokenFills, exchangeAddresses)) {
            usdc = agg->usdc_amount();
            shares = agg->share_amount();
        } else {
            for (const FillEvent* f : tokenFills) {
                usdc += f->usdc_amount();
                shares += f->share_amount();
            }
        }
        if (shares == 0) {
            ++out.skippedZeroShares;
            continue;
        }
        if (usdc <= 0 || usdc >= shares) {
            ++out.rejectedOutOfRange;
            continue;
        }
        out.points.push_back({tx.timestamp, Rational{usdc, shares}, tx.block, tx.txIndex, shares, usdc});
    }
    std::stable_sort(out.points.begin(), out.points.end(),
                     [](const PricePoint& a, const PricePoint& b) { return a.timestamp < b.timestamp; });
    return out;
}

std::vector<DeviationPoint> arbitrage_deviation(const std::vector<PricePoint>& yes, const std::vector<PricePoint>& no,
                                                UnixSeconds gridStep) {
    if (yes.empty() || no.empty()) throw std::invalid_argument("both price series must be non-empty");
    if (gridStep <= 0) throw std::invalid_argument("grid step must be positive");
    const UnixSeconds first = std::max(yes.front().timestamp, no.front().timestamp);
    const UnixSeconds last = std::max(yes.back().timestamp, no.back().timestamp);
    std::vector<DeviationPoint> out;
    std::size_t iy = 0, in = 0;
    for (UnixSeconds t = first; t <= last; t += gridStep) {
        while (iy + 1 < yes.size() && yes[iy + 1].timestamp <= t) ++iy;
        while (in + 1 < no.size() && no[in + 1].timestamp <= t) ++in;
        const Rational& py = yes[iy].price;
        const Rational& pn = no[in].price;
        // Exact numerator of py + pn - 1 over py.den * pn.den.
        const __int128 den = static_cast<__int128>(py.den) * pn.den;
        const __int128 num = static_cast<__int128>(py.num) * pn.den + static_cast<__int128>(pn.num) * py.den - den;
        out.push_back({t, static_cast<double>(num) / static_cast<double>(den), t - yes[iy].timestamp,
                       t - no[in].timestamp});
    }
    return out;
}

std::vector<InflowPoint> daily_net_inflow(const std::vector<DecomposedTx>& rows, const std::string& market, Side side,
                                          UnixSeconds from, UnixSeconds to) {
    std::vector<InflowPoint> out;
    for (const auto& t : aggregate_components(rows, Partition::Day, market, DenseRange{from, to}))
        out.push_back({t.start, net_inflow(t.side(side))});
    return out;
}

std::vector<InflowPoint> splice_inflow_series(const std::vector<InflowPoint>& before,
                                              const std::vector<InflowPoint>& after, UnixSeconds spliceDay) {
    const UnixSeconds cut = floor_day(spliceDay);
    std::vector<InflowPoint> out;
    for (const auto& p : before)
        if (p.day < cut) out.push_back(p);
    for (const auto& p : after)
        if (p.day >= cut) out.push_back(p);
    std::stable_sort(out.begin(), out.end(), [](const InflowPoint& a, const InflowPoint& b) { return a.day < b.day; });
    return out;
}

std::vector<CorrelationPoint> rolling_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                                  const std::vector<UnixSeconds>& days, std::size_t windowDays,
                                                  std::size_t stepDays) {
    if (a.size() != b.size() || a.size() != days.size()) throw std::invalid_argument("series lengths differ");
    if (windowDays < 2 || stepDays == 0) throw std::invalid_argument("window must be >= 2 and step >= 1");
    std::vector<CorrelationPoint> out;
    if (a.size() < windowDays) return out;
    for (std::size_t end = windowDays - 1; end < a.size(); end += stepDays) {
        const std::size_t begin = end + 1 - windowDays;
        const auto [aMin, aMax] = std::minmax_element(a.begin() + begin, a.begin() + end + 1);
        const auto [bMin, bMax] = std::minmax_element(b.begin() + begin, b.begin() + end + 1);
        CorrelationPoint p{days[end], std::nullopt};
        if (*aMin != *aMax && *bMin != *bMax) {
            double ma = 0, mb = 0;
            for (std::size_t i = begin; i <= end; ++i) {
                ma += a[i];
                mb += b[i];
            }
            ma /= static_cast<double>(windowDays);
            mb /= static_cast<double>(windowDays);
            double sab = 0, saa = 0, sbb = 0;
            for (std::size_t i = begin; i <= end; ++i) {
                const double da = a[i] - ma, db = b[i] - mb;
                sab += da * db;
                saa += da * da;
                sbb += db * db;
            }
            p.value = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
        }
        out.push_back(p);
    }
    return out;
}

std::vector<CorrelationPoint> rolling_correlation(const std::vector<InflowPoint>& a, const std::vector<InflowPoint>& b,
                                                  std::size_t windowDays, std::size_t stepDays) {
    if (a.size() != b.size()) throw std::invalid_argument("inflow series must cover the same days");
    std::vector<double> va, vb;
    std::vector<UnixSeconds> days;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].day != b[i].day) throw std::invalid_argument("inflow series are not day-aligned");
        if (i > 0 && a[i].day != a[i - 1].day + kSecondsPerDay) throw std::invalid_argument("inflow series is not dense");
        va.push_back(static_cast<double>(a[i].netInflow) / kMicroPerUnit);
        vb.push_back(static_cast<double>(b[i].netInflow) / kMicroPerUnit);
        days.push_back(a[i].day);
    }
    return rolling_correlation(va, vb, days, windowDays, stepDays);
}

} // namespace pmflow
