#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmflow/decompose.hpp"

namespace pmflow {

struct KindWeights {
    double pureExchange = 1.0;
    double shareMinting = 1.0;
    double shareBurning = 1.0;
    double mixedMint = 1.0;
    double mixedBurn = 1.0;
};

/// A large trader buying one side of a market during [from, to).
struct WhaleWindow {
    std::string address;
    std::string market;
    Side side = Side::Yes;
    UnixSeconds from = 0;
    UnixSeconds to = 0;
    double sizeMultiplier = 20.0;
    double probability = 0.3;
};

/// Pushes pYes + pNo - 1 of `market` by `delta` just before regular transaction `atTransaction`.
struct MispricingInjection {
    std::size_t atTransaction = 0;
    std::string market;
    double delta = 0.0;
};

struct SyntheticScenario {
    std::uint64_t seed = 42;
    std::size_t transactions = 1000;
    UnixSeconds start = 1704412800; // 2024-01-05T00:00:00Z
    std::uint64_t startBlock = 51'000'000;
    UnixSeconds blockSeconds = 2;
    double meanGapSeconds = 60.0;
    KindWeights kinds;
    std::size_t maxMakersPerLeg = 3;
    std::size_t traders = 200;
    double marketMakerShare = 0.1;
    double meanShares = 150.0;
    double initialYesPrice = 0.5;
    double volatility = 0.01;       ///< log-odds noise per transaction
    double impactPerMillion = 2.0;  ///< log-odds move per million USDC of aggressor flow
    double mixedSpread = 0.0;       ///< price premium on the minted/burned leg of mixed trades
    std::array<double, 24> diurnal{};
    bool arbitrageur = false;
    double arbitrageTolerance = 0.002;
    std::vector<MispricingInjection> injections;
    std::vector<WhaleWindow> whales;
    std::vector<MarketSpec> markets;
    std::string exchangeAddress = "0xC5d563A36AE78145C45a50134d48A1215220f80a";

    SyntheticScenario() { diurnal.fill(1.0); }
};

struct GroundTruthTx {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    UnixSeconds timestamp = 0;
    std::string market;
    TxKind kind = TxKind::PureExchange;
    VolumeComponents components;
    std::string taker;
    std::string takerToken;
    int aggressor = 0; ///< +1 when the taker buys takerToken, -1 when selling
    bool arbitrage = false;
};

/// One arbitrage round: off-ledger split (or merge) of `quantity` full sets and the two
/// on-ledger trades that sell (or buy) them.
struct ArbitrageEvent {
    std::size_t beforeTransaction = 0;
    std::string market;
    std::string action; ///< "split_and_sell" or "buy_and_merge"
    Micro quantity = 0;
    double deltaBefore = 0.0;
    double deltaAfter = 0.0;
    UnixSeconds timestamp = 0;
    std::vector<TxKey> trades;
};

struct SyntheticLedger {
    std::vector<FillEvent> fills;
    std::vector<GroundTruthTx> truth;
    std::vector<ArbitrageEvent> arbitrage;
};

/// Deterministic for a given scenario (including seed). Ground-truth components are built
/// while constructing each transaction's fills.
SyntheticLedger generate_synthetic_ledger(const SyntheticScenario& scenario);

/// Scenario document: the market-config format plus a "scenario" object.
SyntheticScenario parse_scenario(std::string_view jsonText);
SyntheticScenario load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const GroundTruthTx& t);
GroundTruthTx ground_truth_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ArbitrageEvent& e);

/// Serialized in a fixed key order.
std::string to_jsonl_line(const GroundTruthTx& t);

} // namespace pmflow
