#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "pmflow/microstructure.hpp"
#include "pmflow/synth.hpp"
#include "test_support.hpp"

using namespace pmflow;
using namespace testing_support;

namespace {

PricePoint pp(UnixSeconds t, Micro priceMicro, Micro shares = 100 * kMicroPerUnit) {
    const Micro usdc = static_cast<Micro>(static_cast<__int128>(priceMicro) * shares / kMicroPerUnit);
    return {t, Rational{priceMicro, kMicroPerUnit}, 0, 0, shares, usdc};
}

/// Dense hourly increments starting at `h0` with dTheta = slope * flow + noise.
std::vector<BarIncrement> linear_increments(UnixSeconds h0, std::size_t n, double slope, double sigma,
                                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> flow(0.0, 0.5), noise(0.0, sigma > 0 ? sigma : 1.0);
    std::vector<BarIncrement> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = flow(rng);
        const double e = sigma > 0 ? noise(rng) : 0.0;
        out.push_back({h0 + static_cast<UnixSeconds>(i) * kSecondsPerHour, slope * q + e, q});
    }
    return out;
}

} // namespace

TEST(TickRule, DirectionsCarryForward) {
    const auto s = sign_trades({pp(0, 500'000), pp(1, 520'000), pp(2, 520'000), pp(3, 510'000)});
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].direction, 0);
    EXPECT_EQ(s[0].signedFlow, 0.0);
    EXPECT_EQ(s[1].direction, 1);
    EXPECT_EQ(s[2].direction, 1);
    EXPECT_EQ(s[3].direction, -1);
    EXPECT_DOUBLE_EQ(s[1].sizeMillions, 52.0 / 1e6);
    EXPECT_DOUBLE_EQ(s[3].signedFlow, -51.0 / 1e6);
}

TEST(TickRule, MonotoneIncreasing) {
    std::vector<PricePoint> p;
    for (int i = 0; i < 20; ++i) p.push_back(pp(i, 300'000 + 10'000 * i));
    const auto s = sign_trades(p);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_EQ(s[i].direction, 1);
    EXPECT_THROW(sign_trades({pp(5, 500'000), pp(4, 500'000)}), std::invalid_argument);
}

TEST(TickRule, AgreementWithGeneratorAggressor) {
    SyntheticScenario sc;
    sc.seed = 13;
    sc.transactions = 4000;
    sc.markets = {trump()};
    sc.volatility = 0.0;
    sc.impactPerMillion = 200.0;
    sc.kinds = {1, 0, 0, 0, 0};
    const auto led = generate_synthetic_ledger(sc);
    const auto txs = group_transactions(led.fills);
    const auto prices = build_price_series(txs, kTrumpYes, {sc.exchangeAddress});
    const auto signedTrades = sign_trades(prices.points);
    std::map<std::pair<std::uint64_t, std::uint64_t>, int> aggressor;
    for (const auto& t : led.truth)
        if (t.takerToken == kTrumpYes) aggressor[{t.block, t.txIndex}] = t.aggressor;
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < signedTrades.size(); ++i) {
        auto it = aggressor.find({prices.points[i].block, prices.points[i].txIndex});
        if (it == aggressor.end() || signedTrades[i].direction == 0) continue;
        ++total;
        if (signedTrades[i].direction == it->second) ++agree;
    }
    ASSERT_GT(total, 500u);
    const double rate = static_cast<double>(agree) / static_cast<double>(total);
    RecordProperty("tick_rule_agreement", std::to_string(rate));
    EXPECT_GT(rate, 0.5);
}

TEST(HourlyBars, VwapAndCarryForward) {
    std::vector<SignedTrade> t(3);
    t[0] = {10, 0.4, 100, 40e-6, 1, 40e-6};
    t[1] = {20, 0.6, 300, 180e-6, 1, 180e-6};
    t[2] = {2 * kSecondsPerHour + 5, 0.5, 10, 5e-6, -1, -5e-6};
    const auto bars = hourly_bars(t);
    ASSERT_EQ(bars.size(), 3u);
    EXPECT_NEAR(bars[0].vwap, 0.55, 1e-12);
    EXPECT_NEAR(bars[0].netFlow, 220e-6, 1e-18);
    EXPECT_TRUE(bars[1].carriedForward);
    EXPECT_EQ(bars[1].netFlow, 0.0);
    EXPECT_EQ(bars[1].vwap, bars[0].vwap);
    EXPECT_EQ(bars[1].tradeCount, 0u);
    EXPECT_FALSE(bars[2].carriedForward);
    const auto notional = hourly_bars(t, VwapWeight::Notional);
    EXPECT_NEAR(notional[0].vwap, (40e-6 * 0.4 + 180e-6 * 0.6) / 220e-6, 1e-12);
}

TEST(HourlyBars, SumsMatchBruteForceOver720Hours) {
    std::mt19937_64 rng(6);
    std::vector<SignedTrade> trades;
    UnixSeconds t = 0;
    while (t < 720 * kSecondsPerHour) {
        SignedTrade s;
        s.timestamp = t;
        s.price = 0.05 + 0.9 * std::uniform_real_distribution<double>()(rng);
        s.shares = 1 + static_cast<double>(rng() % 500);
        s.sizeMillions = s.shares * s.price / 1e6;
        s.direction = (rng() & 1) ? 1 : -1;
        s.signedFlow = s.direction * s.sizeMillions;
        trades.push_back(s);
        t += static_cast<UnixSeconds>(rng() % 9000);
    }
    const auto bars = hourly_bars(trades);
    std::map<UnixSeconds, std::array<double, 3>> acc;
    for (const auto& s : trades) {
        auto& a = acc[s.timestamp / 3600 * 3600];
        a[0] += s.shares * s.price;
        a[1] += s.shares;
        a[2] += s.signedFlow;
    }
    double prevVwap = 0;
    for (const auto& b : bars) {
        auto it = acc.find(b.hour);
        if (it == acc.end()) {
            EXPECT_TRUE(b.carriedForward);
            EXPECT_EQ(b.vwap, prevVwap);
            EXPECT_EQ(b.netFlow, 0.0);
        } else {
            EXPECT_NEAR(b.vwap, it->second[0] / it->second[1], 1e-12);
            EXPECT_NEAR(b.netFlow, it->second[2], 1e-15);
        }
        prevVwap = b.vwap;
    }
}

TEST(LogOdds, ValuesAndRoundTrip) {
    EXPECT_EQ(log_odds(0.5).theta, 0.0);
    EXPECT_NEAR(log_odds(0.7).theta, 0.8472978603872037, 1e-12);
    double prev = -1e9;
    for (int i = 1; i <= 99; ++i) {
        const double p = i / 100.0;
        const double th = log_odds(p).theta;
        EXPECT_GT(th, prev);
        prev = th;
        EXPECT_NEAR(inverse_log_odds(th), p, 1e-12);
    }
    EXPECT_TRUE(log_odds(0.0).clamped);
    EXPECT_TRUE(log_odds(1.0).clamped);
    EXPECT_FALSE(log_odds(0.3).clamped);
    EXPECT_NEAR(log_odds(1.0).theta, std::log((1 - 1e-6) / 1e-6), 1e-9);
}

TEST(LogOdds, CarryForwardBarsContributeNothing) {
    std::vector<HourBar> bars{{0, 0.5, 0.1, 1, false}, {3600, 0.5, 0.0, 0, true}, {7200, 0.6, 0.2, 2, false}};
    const auto inc = log_odds_increments(bars);
    ASSERT_EQ(inc.size(), 2u);
    EXPECT_EQ(inc[0].dTheta, 0.0);
    EXPECT_EQ(inc[0].flow, 0.0);
    EXPECT_NEAR(inc[1].dTheta, log_odds(0.6).theta, 1e-12);
}

TEST(KyleLambda, NoiselessRecovery) {
    const UnixSeconds h0 = parse_utc("2024-03-01");
    const auto inc = linear_increments(h0, 720 + 24 * 5, 0.2, 0.0, 1);
    const auto est = rolling_kyle_lambda(inc);
    ASSERT_EQ(est.size(), 6u);
    EXPECT_EQ(est[0].date, h0 + 720 * kSecondsPerHour);
    for (const auto& e : est) {
        EXPECT_NEAR(*e.lambda, 0.2, 1e-12);
        EXPECT_NEAR(*e.standardError, 0.0, 1e-12);
        EXPECT_EQ(e.observations, 720u);
    }
}

TEST(KyleLambda, ShortSeriesWithheldAndZeroFlowNull) {
    const UnixSeconds h0 = parse_utc("2024-03-01");
    EXPECT_TRUE(rolling_kyle_lambda(linear_increments(h0, 719, 0.2, 0.0, 1)).empty());
    std::vector<BarIncrement> flat;
    for (std::size_t i = 0; i < 720; ++i) flat.push_back({h0 + static_cast<UnixSeconds>(i) * 3600, 0.01, 0.0});
    const auto est = rolling_kyle_lambda(flat);
    ASSERT_EQ(est.size(), 1u);
    EXPECT_FALSE(est[0].lambda.has_value());
}

TEST(KyleLambda, FirstEstimateWaitsForMidnight) {
    const UnixSeconds h0 = parse_utc("2024-03-01T05:00:00Z");
    const auto est = rolling_kyle_lambda(linear_increments(h0, 800, 0.2, 0.0, 1));
    ASSERT_FALSE(est.empty());
    EXPECT_EQ(est[0].date, parse_utc("2024-04-01"));
}

TEST(KyleLambda, MonteCarloCoverage) {
    const UnixSeconds h0 = parse_utc("2024-03-01");
    int within = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
        const auto est = rolling_kyle_lambda(linear_increments(h0, 720, 0.1, 0.01, 100 + s));
        ASSERT_EQ(est.size(), 1u);
        if (std::abs(*est[0].lambda - 0.1) <= 3 * *est[0].standardError) ++within;
    }
    EXPECT_GE(within, 990);
}

TEST(KyleLambda, ConsistentAsNoiseVanishes) {
    const UnixSeconds h0 = parse_utc("2024-03-01");
    double prevErr = 1e9;
    for (double sigma : {0.1, 0.01, 0.001}) {
        double err = 0;
        for (int s = 0; s < 50; ++s) err += std::abs(*rolling_kyle_lambda(linear_increments(h0, 720, 0.3, sigma, s))[0].lambda - 0.3);
        EXPECT_LT(err, prevErr);
        prevErr = err;
    }
    EXPECT_LT(prevErr / 50, 1e-3);
}

TEST(KyleLambda, ClosedFormMatchesEigenLeastSquares) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 50 + rng() % 700;
        std::normal_distribution<double> d(0, 1);
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = X(i, 0) = d(rng);
            ys[i] = y(i) = 0.4 * xs[i] + d(rng);
        }
        const double oracle = X.colPivHouseholderQr().solve(y)(0);
        const auto fit = fit_through_origin(xs, ys);
        EXPECT_NEAR(*fit.slope, oracle, 1e-10 * std::abs(oracle));
    }
}

TEST(PriceImpact, PaperExamplesAndTaylorBound) {
    EXPECT_NEAR(price_impact_delta_p(0.518, 0.5, 1), 0.1295, 1e-15);
    EXPECT_NEAR(price_impact_delta_p(0.01, 0.5, 1), 0.0025, 1e-15);
    EXPECT_EQ(price_impact_delta_p(0.0, 0.5, 1), 0.0);
    EXPECT_THROW(price_impact_delta_p(0.1, 1.0, 1), std::invalid_argument);
    for (int i = -200; i <= 200; ++i) {
        const double dTheta = i / 1000.0;
        const double exact = inverse_log_odds(dTheta) - inverse_log_odds(0.0);
        EXPECT_LE(std::abs(exact - price_impact_delta_p(dTheta, 0.5, 1)), 2 * dTheta * dTheta);
    }
}

TEST(Ols, HandComputedThreePoints) {
    // x = (1, 2, 3), y = (1, 3, 2): slope 0.5, intercept 1, RSS 1.5, SST 2.
    const auto r = ols({1, 2, 3}, {1, 3, 2});
    EXPECT_NEAR(r.slope, 0.5, 1e-15);
    EXPECT_NEAR(*r.intercept, 1.0, 1e-15);
    EXPECT_NEAR(r.r2, 0.25, 1e-15);
    EXPECT_NEAR(r.adjustedR2, -0.5, 1e-15);
    EXPECT_NEAR(r.slopeT, 0.5 / std::sqrt(1.5 / 2.0), 1e-12);
    EXPECT_NEAR(*r.interceptT, 1.0 / std::sqrt(1.5 * 14.0 / 6.0), 1e-12);
    EXPECT_EQ(r.n, 3u);
}

TEST(Ols, ExactLineAndErrors) {
    std::vector<double> v, l;
    for (int i = 0; i < 20; ++i) {
        v.push_back(i * 0.7);
        l.push_back(1 - 0.05 * v.back());
    }
    const auto r = ols(v, l);
    EXPECT_NEAR(r.slope, -0.05, 1e-12);
    EXPECT_NEAR(*r.intercept, 1.0, 1e-12);
    EXPECT_NEAR(r.r2, 1.0, 1e-12);
    EXPECT_THROW(ols({2, 2, 2, 2}, {1, 2, 3, 4}), RegressionError);
    EXPECT_THROW(ols({1, 2}, {1, 2}), RegressionError);
    const auto origin = ols({1, 2, 3}, {2, 4, 6}, false);
    EXPECT_FALSE(origin.intercept.has_value());
    EXPECT_NEAR(origin.slope, 2.0, 1e-15);
    EXPECT_NEAR(origin.r2, 1.0, 1e-15);
}

TEST(Ols, RSquaredInUnitInterval) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> d(0, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x(30), y(30);
        for (int i = 0; i < 30; ++i) {
            x[i] = d(rng);
            y[i] = d(rng) + (t % 3) * x[i];
        }
        for (bool icpt : {true, false}) {
            const auto r = ols(x, y, icpt);
            ASSERT_GE(r.r2, 0.0);
            ASSERT_LE(r.r2, 1.0);
        }
    }
}

TEST(LambdaVolume, JoinsOnDate) {
    std::vector<LambdaEstimate> lam;
    std::vector<DatedValue> vol;
    for (int i = 0; i < 10; ++i) {
        const UnixSeconds d = i * kSecondsPerDay;
        const double v = 1.0 + i;
        lam.push_back({d, i == 4 ? std::nullopt : std::optional<double>(1 - 0.05 * v), 0.0, 720, 720});
        if (i != 7) vol.push_back({d, v});
    }
    const auto r = lambda_volume_regression(lam, vol);
    EXPECT_EQ(r.n, 8u);
    EXPECT_NEAR(r.slope, -0.05, 1e-12);
}

TEST(RollingVolume, ConstantStepAndBruteForce) {
    std::vector<DatedValue> c, step, rnd;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const UnixSeconds d = i * kSecondsPerDay;
        c.push_back({d, 2.0});
        step.push_back({d, i < 50 ? 0.0 : 3.0});
        rnd.push_back({d, std::uniform_real_distribution<double>(0, 10)(rng)});
    }
    for (const auto& v : rolling_avg_volume(c)) EXPECT_NEAR(v.value, 2.0, 1e-12);
    const auto ramp = rolling_avg_volume(step);
    ASSERT_EQ(ramp.size(), 71u);
    EXPECT_EQ(ramp.front().date, 29 * kSecondsPerDay);
    for (const auto& v : ramp) {
        const auto day = v.date / kSecondsPerDay;
        const double expected = 3.0 * static_cast<double>(std::clamp<long long>(day - 49, 0, 30)) / 30.0;
        EXPECT_NEAR(v.value, expected, 1e-12);
    }
    const auto avg = rolling_avg_volume(rnd, 7);
    for (std::size_t k = 0; k < avg.size(); ++k) {
        double s = 0;
        for (std::size_t i = k; i < k + 7; ++i) s += rnd[i].value;
        EXPECT_NEAR(avg[k].value, s / 7, 1e-12);
    }
    EXPECT_THROW(rolling_avg_volume({{0, 1}, {5, 1}}), std::invalid_argument);
}
