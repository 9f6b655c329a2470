#include "pmflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace pmflow {

using nlohmann::json;

namespace {

constexpr Micro kMinPrice = 10'000;  // 0.01
constexpr Micro kMaxPrice = 990'000; // 0.99
constexpr Micro kMinLeg = 100'000;   // 0.1 share

Micro usdc_for(Micro shares, Micro price) {
    return static_cast<Micro>(static_cast<__int128>(shares) * price / kMicroPerUnit);
}

Micro to_price(double p) {
    return std::clamp(static_cast<Micro>(std::llround(p * kMicroPerUnit)), kMinPrice, kMaxPrice);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct MarketState {
    const MarketSpec* spec = nullptr;
    double theta = 0.0;     // log-odds of the fair YES price
    double yesOffset = 0.0; // leg premia; their sum is the arbitrage deviation
    double noOffset = 0.0;

    Micro price(Side s) const {
        const double fair = logistic(theta);
        return s == Side::Yes ? to_price(fair + yesOffset) : to_price(1.0 - fair + noOffset);
    }
    double delta() const {
        return static_cast<double>(price(Side::Yes) + price(Side::No) - kMicroPerUnit) / kMicroPerUnit;
    }
};

class Generator {
public:
    explicit Generator(const SyntheticScenario& sc) : sc_(sc), rng_(sc.seed) {
        if (sc.markets.empty()) throw ConfigError("scenario needs at least one market");
        if (sc.traders < 4) throw ConfigError("scenario needs at least 4 traders");
        if (sc.maxMakersPerLeg == 0) throw ConfigError("maxMakersPerLeg must be positive");
        for (const auto& m : sc.markets) {
            MarketState st;
            st.spec = &m;
            const double p = std::clamp(sc.initialYesPrice, 0.02, 0.98);
            st.theta = std::log(p / (1.0 - p));
            states_.push_back(st);
        }
        std::uniform_int_distribution<int> hex(0, 15);
        for (std::size_t i = 0; i < sc.traders; ++i) traders_.push_back(make_address(hex));
        mmCount_ = std::max<std::size_t>(1, static_cast<std::size_t>(sc.marketMakerShare * static_cast<double>(sc.traders)));
        arbitrageurAddress_ = make_address(hex);
        time_ = sc.start;
        diurnalMax_ = *std::max_element(sc.diurnal.begin(), sc.diurnal.end());
        if (!(diurnalMax_ > 0)) throw ConfigError("diurnal profile needs a positive weight");
    }

    SyntheticLedger run() {
        for (std::size_t i = 0; i < sc_.transactions; ++i) {
            for (const auto& inj : sc_.injections)
                if (inj.atTransaction == i) inject(inj, i);
            regular_transaction();
        }
        return std::move(out_);
    }

private:
    std::string make_address(std::uniform_int_distribution<int>& hex) {
        static const char* digits = "0123456789abcdef";
        std::string a = "0x";
        for (int k = 0; k < 40; ++k) a += digits[hex(rng_)];
        return a;
    }

    std::size_t market_index(const std::string& name) const {
        if (name.empty()) return 0;
        for (std::size_t i = 0; i < states_.size(); ++i)
            if (states_[i].spec->candidate == name) return i;
        throw ConfigError("scenario references unknown market '" + name + "'");
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

    void advance_clock() {
        std::exponential_distribution<double> gap(1.0 / std::max(1e-3, sc_.meanGapSeconds));
        while (true) {
            time_ += std::max<UnixSeconds>(1, static_cast<UnixSeconds>(std::llround(gap(rng_))));
            const auto hour = static_cast<std::size_t>((time_ - floor_day(time_)) / kSecondsPerHour);
            if (uniform() * diurnalMax_ <= sc_.diurnal[hour]) break;
        }
    }

    // Assigns block coordinates for the next transaction at time_.
    std::pair<std::uint64_t, std::uint64_t> next_coordinates() {
        const auto block = sc_.startBlock + static_cast<std::uint64_t>((time_ - sc_.start) / sc_.blockSeconds);
        if (block == lastBlock_) {
            lastTxIndex_ += 1 + std::uniform_int_distribution<std::uint64_t>(0, 4)(rng_);
        } else {
            lastBlock_ = block;
            lastTxIndex_ = std::uniform_int_distribution<std::uint64_t>(0, 40)(rng_);
        }
        return {block, lastTxIndex_};
    }

    UnixSeconds block_time(std::uint64_t block) const {
        return sc_.start + static_cast<UnixSeconds>(block - sc_.startBlock) * sc_.blockSeconds;
    }

    const std::string& pick_maker(const std::string& taker) {
        while (true) {
            const bool mm = uniform() < 0.7;
            const std::size_t idx = mm ? std::uniform_int_distribution<std::size_t>(0, mmCount_ - 1)(rng_)
                                       : std::uniform_int_distribution<std::size_t>(0, traders_.size() - 1)(rng_);
            if (traders_[idx] != taker) return traders_[idx];
        }
    }

    const std::string& pick_taker() {
        const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, traders_.size() - 1)(rng_);
        return traders_[idx];
    }

    Micro draw_shares(double multiplier) {
        std::lognormal_distribution<double> size(std::log(std::max(1.0, sc_.meanShares)), 0.8);
        const double shares = size(rng_) * multiplier;
        return std::max<Micro>(kMicroPerUnit, static_cast<Micro>(std::llround(shares * kMicroPerUnit)));
    }

    std::vector<Micro> split_legs(Micro total, std::size_t legs) {
        legs = std::max<std::size_t>(1, std::min<std::size_t>(legs, static_cast<std::size_t>(total / kMinLeg)));
        std::vector<Micro> out;
        Micro remaining = total;
        for (std::size_t k = 0; k + 1 < legs; ++k) {
            const Micro room = remaining - static_cast<Micro>(legs - k - 1) * kMinLeg;
            const Micro share = std::uniform_int_distribution<Micro>(kMinLeg, std::max(kMinLeg, room / 2))(rng_);
            out.push_back(share);
            remaining -= share;
        }
        out.push_back(remaining);
        return out;
    }

    std::size_t draw_leg_count() {
        return std::uniform_int_distribution<std::size_t>(1, sc_.maxMakersPerLeg)(rng_);
    }

    TxKind draw_kind() {
        const auto& w = sc_.kinds;
        std::discrete_distribution<int> d({w.pureExchange, w.shareMinting, w.shareBurning, w.mixedMint, w.mixedBurn});
        return static_cast<TxKind>(d(rng_));
    }

    void move_prices(MarketState& st, Side side, int direction, Micro usdc, bool noise) {
        // Buying YES or selling NO pushes the YES log-odds up.
        const int yesDirection = side == Side::Yes ? direction : -direction;
        const double millions = static_cast<double>(usdc) / (static_cast<double>(kMicroPerUnit) * 1e6);
        st.theta += sc_.impactPerMillion * yesDirection * millions;
        if (noise && sc_.volatility > 0) st.theta += std::normal_distribution<double>(0.0, sc_.volatility)(rng_);
        st.theta = std::clamp(st.theta, -4.0, 4.0);
    }

    struct Builder {
        std::uint64_t block;
        std::uint64_t txIndex;
        UnixSeconds timestamp;
        std::uint64_t logIndex;
        std::vector<FillEvent> fills;

        void add(const std::string& maker, const std::string& taker, const std::string& makerAsset,
                 const std::string& takerAsset, Micro makerAmount, Micro takerAmount, std::uint64_t gap) {
            logIndex += gap;
            fills.push_back({block, txIndex, logIndex, maker, taker, makerAsset, takerAsset, makerAmount, takerAmount,
                             timestamp});
        }
    };

    // Emits one matched transaction: the taker trades `token` (side `side`) against maker legs.
    // exchangeShares go against makers on the same token, complementShares against makers on
    // the complementary token (minting when the taker buys, burning when the taker sells).
    GroundTruthTx emit(MarketState& st, Side side, int direction, const std::string& taker, Micro exchangeShares,
                       Micro complementShares, bool arbitrage) {
        advance_clock();
        const auto [block, txIndex] = next_coordinates();
        const std::string& token = st.spec->token(side);
        const std::string& complement = st.spec->token(side == Side::Yes ? Side::No : Side::Yes);
        const std::string zero(kCollateralAssetId);

        move_prices(st, side, direction, usdc_for(exchangeShares + complementShares, st.price(side)), !arbitrage);
        const Micro px = st.price(side);
        const Micro pxMixed =
            complementShares > 0 && exchangeShares > 0
                ? std::clamp<Micro>(px + static_cast<Micro>(std::llround(sc_.mixedSpread * kMicroPerUnit)), kMinPrice,
                                    kMaxPrice)
                : px;

        Builder b{block, txIndex, block_time(block), std::uniform_int_distribution<std::uint64_t>(0, 400)(rng_), {}};
        auto gap = [&] { return std::uniform_int_distribution<std::uint64_t>(1, 4)(rng_); };

        GroundTruthTx truth;
        truth.block = block;
        truth.txIndex = txIndex;
        truth.timestamp = b.timestamp;
        truth.market = st.spec->candidate;
        truth.taker = taker;
        truth.takerToken = token;
        truth.aggressor = direction;
        truth.arbitrage = arbitrage;
        Micro trade = 0, takerMint = 0, complementFlow = 0;
        Micro takerUsdc = 0, takerShares = 0;

        for (Micro s : exchangeShares > 0 ? split_legs(exchangeShares, draw_leg_count()) : std::vector<Micro>{}) {
            const Micro u = usdc_for(s, px);
            const std::string& maker = pick_maker(taker);
            if (direction > 0)
                b.add(maker, taker, token, zero, s, u, gap()); // maker sells token
            else
                b.add(maker, taker, zero, token, u, s, gap()); // maker buys token
            trade += u;
            takerUsdc += u;
            takerShares += s;
        }
        for (Micro s : complementShares > 0 ? split_legs(complementShares, draw_leg_count()) : std::vector<Micro>{}) {
            const Micro uTaker = usdc_for(s, pxMixed);
            const Micro uMaker = s - uTaker; // full set of s shares is backed by s micro-USDC
            const std::string& maker = pick_maker(taker);
            if (direction > 0)
                b.add(maker, taker, zero, complement, uMaker, s, gap()); // maker buys complement: mint
            else
                b.add(maker, taker, complement, zero, s, uMaker, gap()); // maker sells complement: burn
            takerMint += uTaker;
            complementFlow += uMaker;
            takerUsdc += uTaker;
            takerShares += s;
        }
        // Aggregate fill of the taker's order, settled against the exchange contract.
        if (direction > 0)
            b.add(taker, sc_.exchangeAddress, zero, token, takerUsdc, takerShares, gap());
        else
            b.add(taker, sc_.exchangeAddress, token, zero, takerShares, takerUsdc, gap());

        VolumeComponents& c = truth.components;
        const bool yes = side == Side::Yes;
        (yes ? c.yesTrade : c.noTrade) = trade;
        if (direction > 0) {
            (yes ? c.yesMint : c.noMint) = takerMint;
            (yes ? c.noMint : c.yesMint) = complementFlow;
            c.buyVol = takerUsdc + complementFlow;
            c.sellVol = trade;
        } else {
            (yes ? c.yesBurn : c.noBurn) = takerMint;
            (yes ? c.noBurn : c.yesBurn) = complementFlow;
            c.buyVol = trade;
            c.sellVol = takerUsdc + complementFlow;
        }
        if (complementShares == 0)
            truth.kind = TxKind::PureExchange;
        else if (exchangeShares == 0)
            truth.kind = direction > 0 ? TxKind::ShareMinting : TxKind::ShareBurning;
        else
            truth.kind = direction > 0 ? TxKind::MixedMint : TxKind::MixedBurn;

        out_.fills.insert(out_.fills.end(), b.fills.begin(), b.fills.end());
        out_.truth.push_back(truth);
        return truth;
    }

    void regular_transaction() {
        MarketState& st = states_[std::uniform_int_distribution<std::size_t>(0, states_.size() - 1)(rng_)];
        // Clock position for whale lookup; emit() advances it again.
        for (const auto& w : sc_.whales) {
            if (market_index(w.market) != static_cast<std::size_t>(&st - states_.data())) continue;
            if (time_ < w.from || time_ >= w.to || uniform() >= w.probability) continue;
            const Micro shares = draw_shares(w.sizeMultiplier);
            const bool viaMint = uniform() < 0.5;
            const std::string taker = w.address.empty() ? traders_.front() : w.address;
            emit(st, w.side, +1, taker, viaMint ? 0 : shares, viaMint ? shares : 0, false);
            return;
        }
        const TxKind kind = draw_kind();
        const Side side = uniform() < 0.5 ? Side::Yes : Side::No;
        const std::string taker = pick_taker();
        const Micro shares = draw_shares(1.0);
        switch (kind) {
        case TxKind::PureExchange: emit(st, side, uniform() < 0.5 ? 1 : -1, taker, shares, 0, false); break;
        case TxKind::ShareMinting: emit(st, side, 1, taker, 0, shares, false); break;
        case TxKind::ShareBurning: emit(st, side, -1, taker, 0, shares, false); break;
        case TxKind::MixedMint:
        case TxKind::MixedBurn: {
            const Micro part = std::uniform_int_distribution<Micro>(kMinLeg, shares - kMinLeg)(rng_);
            emit(st, side, kind == TxKind::MixedMint ? 1 : -1, taker, part, shares - part, false);
            break;
        }
        }
    }

    void inject(const MispricingInjection& inj, std::size_t index) {
        MarketState& st = states_[market_index(inj.market)];
        st.yesOffset += inj.delta / 2;
        st.noOffset += inj.delta / 2;
        if (!sc_.arbitrageur) return;
        for (int round = 0; round < 12 && std::abs(st.delta()) >= sc_.arbitrageTolerance; ++round) {
            ArbitrageEvent ev;
            ev.beforeTransaction = index;
            ev.market = st.spec->candidate;
            ev.deltaBefore = st.delta();
            ev.action = ev.deltaBefore > 0 ? "split_and_sell" : "buy_and_merge";
            ev.quantity = draw_shares(2.0);
            const int direction = ev.deltaBefore > 0 ? -1 : +1;
            // Each leg trade closes a quarter of the gap, so the round halves |delta|.
            const double push = ev.deltaBefore / 4;
            st.yesOffset -= push;
            auto t1 = emit(st, Side::Yes, direction, arbitrageurAddress_, ev.quantity, 0, true);
            st.noOffset -= push;
            auto t2 = emit(st, Side::No, direction, arbitrageurAddress_, ev.quantity, 0, true);
            ev.timestamp = t1.timestamp;
            ev.trades = {{t1.block, t1.txIndex}, {t2.block, t2.txIndex}};
            ev.deltaAfter = st.delta();
            out_.arbitrage.push_back(ev);
        }
    }

    const SyntheticScenario& sc_;
    std::mt19937_64 rng_;
    std::vector<MarketState> states_;
    std::vector<std::string> traders_;
    std::size_t mmCount_ = 1;
    std::string arbitrageurAddress_;
    UnixSeconds time_ = 0;
    double diurnalMax_ = 1.0;
    std::uint64_t lastBlock_ = 0;
    std::uint64_t lastTxIndex_ = 0;
    SyntheticLedger out_;
};

} // namespace

SyntheticLedger generate_synthetic_ledger(const SyntheticScenario& scenario) { return Generator(scenario).run(); }

SyntheticScenario parse_scenario(std::string_view jsonText) {
    const MarketConfig cfg = parse_market_config(jsonText);
    const json doc = json::parse(jsonText);
    SyntheticScenario sc;
    sc.markets = cfg.markets;
    if (!cfg.exchangeAddresses.empty()) sc.exchangeAddress = *cfg.exchangeAddresses.begin();
    if (!doc.contains("scenario")) return sc;
    const json& s = doc["scenario"];
    if (!s.is_object()) throw ConfigError("'scenario' must be an object");
    try {
        sc.seed = s.value("seed", sc.seed);
        sc.transactions = s.value("transactions", sc.transactions);
        if (s.contains("start")) sc.start = parse_utc(s["start"].get<std::string>());
        sc.startBlock = s.value("startBlock", sc.startBlock);
        sc.blockSeconds = s.value("blockSeconds", sc.blockSeconds);
        sc.meanGapSeconds = s.value("meanGapSeconds", sc.meanGapSeconds);
        sc.maxMakersPerLeg = s.value("maxMakersPerLeg", sc.maxMakersPerLeg);
        sc.traders = s.value("traders", sc.traders);
        sc.marketMakerShare = s.value("marketMakerShare", sc.marketMakerShare);
        sc.meanShares = s.value("meanShares", sc.meanShares);
        sc.initialYesPrice = s.value("initialYesPrice", sc.initialYesPrice);
        sc.volatility = s.value("volatility", sc.volatility);
        sc.impactPerMillion = s.value("impactPerMillion", sc.impactPerMillion);
        sc.mixedSpread = s.value("mixedSpread", sc.mixedSpread);
        sc.arbitrageur = s.value("arbitrageur", sc.arbitrageur);
        sc.arbitrageTolerance = s.value("arbitrageTolerance", sc.arbitrageTolerance);
        if (s.contains("kindWeights")) {
            const json& k = s["kindWeights"];
            sc.kinds.pureExchange = k.value("PureExchange", sc.kinds.pureExchange);
            sc.kinds.shareMinting = k.value("ShareMinting", sc.kinds.shareMinting);
            sc.kinds.shareBurning = k.value("ShareBurning", sc.kinds.shareBurning);
            sc.kinds.mixedMint = k.value("MixedMint", sc.kinds.mixedMint);
            sc.kinds.mixedBurn = k.value("MixedBurn", sc.kinds.mixedBurn);
        }
        if (s.contains("diurnal")) {
            const auto& d = s["diurnal"];
            if (!d.is_array() || d.size() != 24) throw ConfigError("'diurnal' must list 24 hourly weights");
            for (std::size_t h = 0; h < 24; ++h) sc.diurnal[h] = d[h].get<double>();
        }
        for (const auto& inj : s.value("injections", json::array()))
            sc.injections.push_back({inj.at("atTransaction").get<std::size_t>(), inj.value("market", std::string{}),
                                     inj.at("delta").get<double>()});
        for (const auto& w : s.value("whales", json::array())) {
            WhaleWindow ww;
            ww.address = w.value("address", std::string{});
            ww.market = w.value("market", std::string{});
            ww.side = w.value("side", std::string("YES")) == "NO" ? Side::No : Side::Yes;
            ww.from = parse_utc(w.at("from").get<std::string>());
            ww.to = parse_utc(w.at("to").get<std::string>());
            ww.sizeMultiplier = w.value("sizeMultiplier", ww.sizeMultiplier);
            ww.probability = w.value("probability", ww.probability);
            sc.whales.push_back(ww);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return sc;
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

json to_json(const GroundTruthTx& t) {
    const auto& c = t.components;
    return {{"block", t.block},
            {"txIndex", t.txIndex},
            {"timestamp", t.timestamp},
            {"market", t.market},
            {"kind", to_string(t.kind)},
            {"taker", t.taker},
            {"takerToken", t.takerToken},
            {"aggressor", t.aggressor},
            {"arbitrage", t.arbitrage},
            {"buyVol", std::to_string(c.buyVol)},
            {"sellVol", std::to_string(c.sellVol)},
            {"yesTradeVol", std::to_string(c.yesTrade)},
            {"noTradeVol", std::to_string(c.noTrade)},
            {"yesMintVol", std::to_string(c.yesMint)},
            {"noMintVol", std::to_string(c.noMint)},
            {"yesBurnVol", std::to_string(c.yesBurn)},
            {"noBurnVol", std::to_string(c.noBurn)}};
}

GroundTruthTx ground_truth_from_json(const json& j) {
    GroundTruthTx t;
    auto amount = [&](const char* k) { return parse_micro_integer(j.at(k).get<std::string>()); };
    t.block = j.at("block").get<std::uint64_t>();
    t.txIndex = j.at("txIndex").get<std::uint64_t>();
    t.timestamp = j.at("timestamp").get<UnixSeconds>();
    t.market = j.at("market").get<std::string>();
    t.kind = tx_kind_from_string(j.at("kind").get<std::string>());
    t.taker = j.value("taker", std::string{});
    t.takerToken = j.value("takerToken", std::string{});
    t.aggressor = j.value("aggressor", 0);
    t.arbitrage = j.value("arbitrage", false);
    t.components = {amount("yesTradeVol"), amount("noTradeVol"), amount("yesMintVol"), amount("noMintVol"),
                    amount("yesBurnVol"),  amount("noBurnVol"),  amount("buyVol"),     amount("sellVol")};
    return t;
}

json to_json(const ArbitrageEvent& e) {
    json trades = json::array();
    for (const auto& k : e.trades) trades.push_back({{"block", k.block}, {"txIndex", k.txIndex}});
    return {{"beforeTransaction", e.beforeTransaction},
            {"market", e.market},
            {"action", e.action},
            {"quantity", std::to_string(e.quantity)},
            {"deltaBefore", e.deltaBefore},
            {"deltaAfter", e.deltaAfter},
            {"timestamp", e.timestamp},
            {"trades", trades}};
}

std::string to_jsonl_line(const GroundTruthTx& t) { return to_json(t).dump(); }

} // namespace pmflow
