#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "pmflow/cli.hpp"
#include "test_support.hpp"

using namespace pmflow;
using namespace testing_support;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(dir)) m[e.path().filename().string()] = slurp(e.path());
    return m;
}

} // namespace

TEST(Cli, DecomposeWorked) {
    TempDir dir("cli");
    const auto r = run({"decompose", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                        fixture("worked_markets.json").string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rows = lines(slurp(dir / "out" / "decomposed.csv"));
    ASSERT_EQ(rows.size(), 5u);
    const std::string all = slurp(dir / "out" / "decomposed.csv");
    EXPECT_NE(all.find(",PureExchange,123900000,123900000,0,123900000,0,0,0,0"), std::string::npos) << all;
    EXPECT_NE(all.find(",ShareMinting,6000000000,0,0,0,2040000000,3960000000,0,0"), std::string::npos) << all;
    EXPECT_NE(all.find(",ShareBurning,0,206190000,0,0,0,0,82476000,123714000"), std::string::npos) << all;
    EXPECT_NE(all.find(",MixedMint,122095237,84000000,84000000,0,15999999,22095238,0,0"), std::string::npos) << all;
    const auto summary = json::parse(slurp(dir / "out" / "decompose_summary.json"));
    EXPECT_EQ(summary["decomposed"], 4);
    EXPECT_EQ(summary["quarantined"], 0);
    EXPECT_EQ(summary["units"], summary["decomposed"].get<int>() + summary["quarantined"].get<int>());
}

TEST(Cli, MissingMarketConfigWritesNothing) {
    TempDir dir("cli");
    const auto r = run({"decompose", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                        (dir / "absent.json").string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, BadFlagsAreConfigErrors) {
    TempDir dir("cli");
    EXPECT_EQ(run({"decompose", "--bogus"}).code, kExitConfig);
    EXPECT_EQ(run({}).code, kExitConfig);
    EXPECT_EQ(run({"metrics", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                   fixture("worked_markets.json").string(), "--partition", "week", "--out", (dir / "o").string()})
                  .code,
              kExitConfig);
    EXPECT_EQ(run({"metrics", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                   fixture("worked_markets.json").string(), "--from", "2024-05-01", "--to", "2024-04-01", "--out",
                   (dir / "o").string()})
                  .code,
              kExitConfig);
    EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, MalformedInputIsDataError) {
    TempDir dir("cli");
    spit(dir / "bad.jsonl", "{\"block\": 1}\n");
    const auto r = run({"decompose", "--input", (dir / "bad.jsonl").string(), "--markets",
                        fixture("worked_markets.json").string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, AnomalyThresholdExitsFourButWritesQuarantine) {
    TempDir dir("cli");
    // Simultaneous minting and burning on separate legs cannot be attributed uniquely.
    std::string text;
    const std::vector<FillEvent> fills{fill(7, 3, 0, "a", "x", kTrumpYes, true, 70, 100, 1704412800),
                                       fill(7, 3, 1, "b", "x", kTrumpNo, true, 30, 100, 1704412800),
                                       fill(7, 3, 2, "c", "x", kTrumpYes, false, 20, 40, 1704412800),
                                       fill(7, 3, 3, "d", "x", kTrumpNo, false, 10, 40, 1704412800)};
    for (const auto& f : fills) text += serialize_fill(f, RecordFormat::Jsonl) + "\n";
    spit(dir / "in.jsonl", text);
    const auto r = run({"decompose", "--input", (dir / "in.jsonl").string(), "--markets",
                        fixture("worked_markets.json").string(), "--max-anomalies", "0", "--out",
                        (dir / "out").string()});
    EXPECT_EQ(r.code, kExitAnomalies) << r.err;
    const auto summary = json::parse(slurp(dir / "out" / "decompose_summary.json"));
    EXPECT_EQ(summary["quarantined"], 1);
    const auto q = json::parse(lines(slurp(dir / "out" / "quarantine.jsonl")).at(0));
    EXPECT_EQ(q["block"], 7);
    EXPECT_EQ(summary["units"], summary["decomposed"].get<int>() + summary["quarantined"].get<int>());
}

TEST(Cli, SimulateThenDecomposeHasNoMismatches) {
    TempDir dir("cli");
    auto r = run({"simulate", "--scenario", fixture("scenario.json").string(), "--transactions", "3000", "--out",
                  (dir / "sim").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    r = run({"decompose", "--input", (dir / "sim" / "fills.jsonl").string(), "--markets",
             (dir / "sim" / "markets.json").string(), "--truth", (dir / "sim" / "ground_truth.jsonl").string(),
             "--out", (dir / "dec").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto summary = json::parse(slurp(dir / "dec" / "decompose_summary.json"));
    EXPECT_EQ(summary["truth"]["mismatched"], 0);
    EXPECT_GE(summary["truth"]["matched"].get<int>(), 3000);
    EXPECT_EQ(summary["quarantined"], 0);
}

TEST(Cli, RerunsAreByteIdentical) {
    TempDir dir("cli");
    for (const char* tag : {"a", "b"}) {
        const fs::path base = dir / tag;
        ASSERT_EQ(run({"simulate", "--scenario", fixture("scenario.json").string(), "--transactions", "1500", "--out",
                       (base / "sim").string()})
                      .code,
                  kExitOk);
        ASSERT_EQ(run({"decompose", "--input", (base / "sim" / "fills.jsonl").string(), "--markets",
                       (base / "sim" / "markets.json").string(), "--out", (base / "dec").string()})
                      .code,
                  kExitOk);
        ASSERT_EQ(run({"metrics", "--decomposed", (base / "dec" / "decomposed.csv").string(), "--markets",
                       (base / "sim" / "markets.json").string(), "--partition", "day", "--out",
                       (base / "met").string()})
                      .code,
                  kExitOk);
    }
    for (const char* stage : {"sim", "dec", "met"}) EXPECT_EQ(dir_contents(dir / "a" / stage), dir_contents(dir / "b" / stage)) << stage;
}

TEST(Cli, ManifestRecordsDigestsAndConfig) {
    TempDir dir("cli");
    ASSERT_EQ(run({"decompose", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                   fixture("worked_markets.json").string(), "--out", (dir / "out").string()})
                  .code,
              kExitOk);
    const auto m = json::parse(slurp(dir / "out" / "manifest.json"));
    EXPECT_EQ(m["tool"], "pmflow");
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["subcommand"], "decompose");
    EXPECT_EQ(m["configHash"].get<std::string>().size(), 64u);
    bool sawInput = false;
    for (const auto& in : m["inputs"])
        if (in["name"] == "worked_fills.jsonl") {
            sawInput = true;
            EXPECT_EQ(in["sha256"], sha256_hex(slurp(fixture("worked_fills.jsonl"))));
        }
    EXPECT_TRUE(sawInput);
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Cli, JsonFormatAndMetricsColumns) {
    TempDir dir("cli");
    ASSERT_EQ(run({"decompose", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                   fixture("worked_markets.json").string(), "--format", "json", "--out", (dir / "dec").string()})
                  .code,
              kExitOk);
    const auto rows = json::parse(slurp(dir / "dec" / "decomposed.json"));
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) EXPECT_TRUE(r["block"].is_string());

    ASSERT_EQ(run({"metrics", "--input", fixture("worked_fills.jsonl").string(), "--markets",
                   fixture("worked_markets.json").string(), "--market", "Trump", "--from", "2024-01-01", "--to",
                   "2024-04-01", "--out", (dir / "met").string()})
                  .code,
              kExitOk);
    const auto met = lines(slurp(dir / "met" / "metrics.csv"));
    EXPECT_EQ(met[0], "market,side,interval_start,interval_end,trade,mint,burn,exchange_equivalent_volume,net_inflow,"
                      "gross_activity,transactions");
    EXPECT_EQ(met.size(), 1u + 3 * 3);
}

TEST(Cli, ImpactPrintsWorkedValues) {
    const auto r = run({"impact", "--lambda", "0.518", "--lambda", "0.01"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("0.1295"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("0.0025"), std::string::npos) << r.out;
}

TEST(Cli, AnalyticsSubcommandsRunOnSimulation) {
    TempDir dir("cli");
    ASSERT_EQ(run({"simulate", "--scenario", fixture("scenario.json").string(), "--transactions", "6000", "--out",
                   (dir / "sim").string()})
                  .code,
              kExitOk);
    const std::string fills = (dir / "sim" / "fills.jsonl").string(), markets = (dir / "sim" / "markets.json").string();
    auto r = run({"deviation", "--input", fills, "--markets", markets, "--market", "Trump", "--out",
                  (dir / "dev").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir / "dev" / "deviation.csv"));
    r = run({"disagreement", "--input", fills, "--markets", markets, "--corr-window-days", "10", "--splice-day",
             "2024-01-20", "--out", (dir / "dis").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_GT(lines(slurp(dir / "dis" / "correlation.csv")).size(), 1u);
    r = run({"lambda", "--input", fills, "--markets", markets, "--market", "Trump", "--window-hours", "48", "--out",
             (dir / "lam").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_GT(lines(slurp(dir / "lam" / "lambda.csv")).size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "lam" / "regression.json"));
    r = run({"traders", "--input", fills, "--markets", markets, "--quarter", "2024Q1", "--out",
             (dir / "tr").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(lines(slurp(dir / "tr" / "hourly.csv")).size(), 25u);
}
