#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmflow/metrics.hpp"
#include "pmflow/prices.hpp"
#include "pmflow/synth.hpp"
#include "test_support.hpp"

using namespace pmflow;
using namespace testing_support;

namespace {

std::vector<PricePoint> series(std::initializer_list<std::pair<UnixSeconds, double>> pts) {
    std::vector<PricePoint> out;
    for (auto [t, p] : pts) out.push_back({t, Rational{static_cast<Micro>(std::llround(p * 1e6)), kMicroPerUnit}});
    return out;
}

double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    // Textbook single-pass form, deliberately different from the library's centered two-pass sums.
    const double n = static_cast<double>(a.size());
    long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += static_cast<long double>(a[i]) * a[i];
        sbb += static_cast<long double>(b[i]) * b[i];
        sab += static_cast<long double>(a[i]) * b[i];
    }
    const long double num = n * sab - sa * sb;
    const long double den = std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
    return static_cast<double>(num / den);
}

std::vector<InflowPoint> dense(UnixSeconds first, const std::vector<Micro>& values) {
    std::vector<InflowPoint> out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out.push_back({first + static_cast<UnixSeconds>(i) * kSecondsPerDay, values[i]});
    return out;
}

} // namespace

TEST(PriceSeries, WorkedPrices) {
    const auto txs = worked_transactions();
    const std::set<std::string> exch{kExchange};
    const auto no = build_price_series({txs[0]}, kTrumpNo, exch);
    ASSERT_EQ(no.points.size(), 1u);
    EXPECT_EQ(no.points[0].price, (Rational{59, 100}));
    EXPECT_EQ(no.points[0].shares, 210'000'000);

    const auto bidenYes = build_price_series({txs[1]}, kBidenYes, exch);
    ASSERT_EQ(bidenYes.points.size(), 1u);
    EXPECT_EQ(bidenYes.points[0].price, (Rational{34, 100}));
    const auto bidenNo = build_price_series({txs[1]}, kBidenNo, exch);
    EXPECT_EQ(bidenNo.points[0].price, (Rational{66, 100}));
}

TEST(PriceSeries, SummedFillsWithoutAggregate) {
    Transaction tx;
    tx.block = 1;
    tx.timestamp = 10;
    tx.fills = {fill(1, 0, 0, "a", "b", kTrumpYes, true, 30 * kMicroPerUnit, 100 * kMicroPerUnit),
                fill(1, 0, 1, "c", "d", kTrumpYes, true, 50 * kMicroPerUnit, 100 * kMicroPerUnit)};
    const auto s = build_price_series({tx}, kTrumpYes, {});
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_EQ(s.points[0].price, (Rational{4, 10}));
}

TEST(PriceSeries, BoundaryAndZeroShareHandling) {
    Transaction one;
    one.fills = {fill(1, 0, 0, "a", kExchange, kTrumpYes, true, kMicroPerUnit, kMicroPerUnit)};
    Transaction zero;
    zero.block = 2;
    zero.fills = {fill(2, 0, 0, "a", kExchange, kTrumpYes, true, kMicroPerUnit, 0)};
    const auto s = build_price_series({one, zero}, kTrumpYes, {kExchange});
    EXPECT_TRUE(s.points.empty());
    EXPECT_EQ(s.rejectedOutOfRange, 1u);
    EXPECT_EQ(s.skippedZeroShares, 1u);
}

TEST(PriceSeries, ChronologicalOrder) {
    std::vector<Transaction> txs;
    for (UnixSeconds t : {50, 10, 30}) {
        Transaction tx;
        tx.block = static_cast<std::uint64_t>(t);
        tx.timestamp = t;
        tx.fills = {fill(tx.block, 0, 0, "a", kExchange, kTrumpYes, true, 500'000, kMicroPerUnit, t)};
        txs.push_back(tx);
    }
    const auto s = build_price_series(txs, kTrumpYes, {kExchange});
    ASSERT_EQ(s.points.size(), 3u);
    EXPECT_LT(s.points[0].timestamp, s.points[1].timestamp);
    EXPECT_LT(s.points[1].timestamp, s.points[2].timestamp);
}

TEST(Deviation, ComplementaryAndMispriced) {
    auto d = arbitrage_deviation(series({{0, 0.70}}), series({{0, 0.30}}), 60);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NEAR(d[0].delta, 0.0, 1e-15);
    d = arbitrage_deviation(series({{0, 0.72}}), series({{0, 0.31}}), 60);
    EXPECT_NEAR(d[0].delta, 0.03, 1e-12);
}

TEST(Deviation, GridCarryForwardAndStaleness) {
    const auto yes = series({{0, 0.6}, {100, 0.65}, {250, 0.62}});
    const auto no = series({{50, 0.4}, {200, 0.33}});
    const auto d = arbitrage_deviation(yes, no, 50);
    ASSERT_EQ(d.front().timestamp, 50);
    ASSERT_EQ(d.back().timestamp, 250);
    ASSERT_EQ(d.size(), 5u);
    EXPECT_NEAR(d[0].delta, 0.0, 1e-12);
    EXPECT_NEAR(d[1].delta, 0.05, 1e-12); // t=100
    EXPECT_EQ(d[1].yesStaleness, 0);
    EXPECT_EQ(d[1].noStaleness, 50);
    EXPECT_NEAR(d[2].delta, 0.05, 1e-12); // t=150, no trade since
    EXPECT_NEAR(d[3].delta, -0.02, 1e-12);
    EXPECT_NEAR(d[4].delta, -0.05, 1e-12);
    EXPECT_THROW(arbitrage_deviation({}, no, 50), std::invalid_argument);
}

TEST(Deviation, PiecewiseConstantBetweenTrades) {
    std::mt19937_64 rng(4);
    std::vector<PricePoint> yes, no;
    UnixSeconds t = 0;
    for (int i = 0; i < 200; ++i) {
        t += 1 + static_cast<UnixSeconds>(rng() % 5000);
        auto& leg = (rng() & 1) ? yes : no;
        leg.push_back({t, Rational{static_cast<Micro>(100'000 + rng() % 800'000), kMicroPerUnit}});
    }
    const auto d = arbitrage_deviation(yes, no, 600);
    std::set<UnixSeconds> arrivals;
    for (auto& p : yes) arrivals.insert(p.timestamp);
    for (auto& p : no) arrivals.insert(p.timestamp);
    for (std::size_t i = 1; i < d.size(); ++i) {
        const bool arrival = arrivals.lower_bound(d[i - 1].timestamp + 1) != arrivals.upper_bound(d[i].timestamp);
        if (!arrival) ASSERT_EQ(d[i].delta, d[i - 1].delta);
        ASSERT_GT(d[i].delta, -1.0);
        ASSERT_LT(d[i].delta, 1.0);
    }
}

TEST(Deviation, ArbitrageShrinksInjectedMispricing) {
    SyntheticScenario sc;
    sc.seed = 5;
    sc.transactions = 2000;
    sc.markets = {trump()};
    sc.arbitrageur = true;
    sc.injections = {{500, "Trump", 0.05}};
    const auto led = generate_synthetic_ledger(sc);
    ASSERT_FALSE(led.arbitrage.empty());
    EXPECT_EQ(led.arbitrage.front().action, "split_and_sell");
    for (const auto& e : led.arbitrage) EXPECT_LT(std::abs(e.deltaAfter), std::abs(e.deltaBefore));
}

TEST(Splice, SwitchesSourceOnSpliceDay) {
    const UnixSeconds first = parse_utc("2024-07-18");
    const auto before = dense(first, {1, 2, 3, 4, 5, 6});
    const auto after = dense(first, {10, 20, 30, 40, 50, 60});
    const auto s = splice_inflow_series(before, after, parse_utc("2024-07-21T17:46:00Z"));
    EXPECT_EQ(s, dense(first, {1, 2, 3, 40, 50, 60}));
    EXPECT_EQ(splice_inflow_series(before, after, parse_utc("2024-01-01")), after);
}

TEST(Splice, EqualsManualConcatenationOfDailyInflow) {
    SyntheticScenario sc;
    sc.seed = 9;
    sc.transactions = 3000;
    sc.meanGapSeconds = 1800;
    sc.markets = {biden(), {"Harris", "111", "222", 0, std::nullopt}};
    const auto led = generate_synthetic_ledger(sc);
    const auto rows = decompose_ledger(group_transactions(led.fills), sc.markets).rows;
    const UnixSeconds from = floor_day(sc.start), to = floor_day(led.fills.back().timestamp) + kSecondsPerDay;
    const UnixSeconds cut = from + 20 * kSecondsPerDay;
    const auto b = daily_net_inflow(rows, "Biden", Side::Yes, from, to);
    const auto h = daily_net_inflow(rows, "Harris", Side::Yes, from, to);
    const auto spliced = splice_inflow_series(b, h, cut);

    // Manual oracle straight from the decomposed rows.
    std::map<UnixSeconds, Micro> manual;
    for (UnixSeconds d = from; d < to; d += kSecondsPerDay) manual[d] = 0;
    for (const auto& r : rows) {
        const UnixSeconds d = floor_day(r.timestamp);
        if ((r.market == "Biden" && d < cut) || (r.market == "Harris" && d >= cut))
            manual[d] += r.components.yesMint - r.components.yesBurn;
    }
    ASSERT_EQ(spliced.size(), manual.size());
    for (const auto& p : spliced) EXPECT_EQ(p.netInflow, manual.at(p.day));

    const auto daily = aggregate_components(rows, Partition::Day, "Biden", DenseRange{from, to});
    for (std::size_t i = 0; i < daily.size(); ++i) EXPECT_EQ(b[i].netInflow, net_inflow(daily[i].yes));
}

TEST(Correlation, AffineAndNegated) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> a(200), twice(200), neg(200), affine(200);
    std::vector<UnixSeconds> days(200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = n(rng);
        twice[i] = 2 * a[i];
        neg[i] = -a[i];
        affine[i] = 3.5 * a[i] + 100;
        days[i] = static_cast<UnixSeconds>(i) * kSecondsPerDay;
    }
    for (const auto& p : rolling_correlation(a, twice, days, 90, 1)) EXPECT_NEAR(p.value.value(), 1.0, 1e-12);
    for (const auto& p : rolling_correlation(a, neg, days, 90, 1)) EXPECT_NEAR(p.value.value(), -1.0, 1e-12);
    const auto base = rolling_correlation(a, neg, days, 30, 7);
    const auto shifted = rolling_correlation(affine, neg, days, 30, 7);
    ASSERT_EQ(base.size(), shifted.size());
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(*base[i].value, *shifted[i].value, 1e-9);
    EXPECT_EQ(rolling_correlation(a, a, days, 90, 1).size(), 111u);
    EXPECT_EQ(rolling_correlation(a, a, days, 90, 1).front().day, days[89]);
}

TEST(Correlation, ZeroVarianceIsNull) {
    std::vector<double> flat(100, 3.0), ramp(100);
    std::vector<UnixSeconds> days(100);
    for (std::size_t i = 0; i < 100; ++i) {
        ramp[i] = static_cast<double>(i);
        days[i] = static_cast<UnixSeconds>(i);
    }
    for (const auto& p : rolling_correlation(flat, ramp, days, 90, 1)) EXPECT_FALSE(p.value.has_value());
}

TEST(Correlation, WhiteNoiseAgreesWithIndependentOracle) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 1);
    const std::size_t len = 10000;
    std::vector<double> a(len), b(len);
    std::vector<UnixSeconds> days(len);
    for (std::size_t i = 0; i < len; ++i) {
        a[i] = n(rng);
        b[i] = n(rng);
        days[i] = static_cast<UnixSeconds>(i) * kSecondsPerDay;
    }
    const auto corr = rolling_correlation(a, b, days, 90, 1);
    double mean = 0;
    for (std::size_t k = 0; k < corr.size(); ++k) {
        const double v = corr[k].value.value();
        ASSERT_GE(v, -1.0);
        ASSERT_LE(v, 1.0);
        mean += v;
        if (k % 97 == 0) {
            std::vector<double> wa(a.begin() + k, a.begin() + k + 90), wb(b.begin() + k, b.begin() + k + 90);
            EXPECT_NEAR(v, naive_pearson(wa, wb), 1e-9);
        }
    }
    mean /= static_cast<double>(corr.size());
    EXPECT_NEAR(mean, 0.0, 0.05);
}

TEST(Correlation, InflowOverloadChecksAlignment) {
    const auto a = dense(0, {1, 2, 3});
    auto b = dense(kSecondsPerDay, {1, 2, 3});
    EXPECT_THROW(rolling_correlation(a, b, 2, 1), std::invalid_argument);
    EXPECT_EQ(rolling_correlation(a, dense(0, {2, 4, 6}), 2, 1).size(), 2u);
}
