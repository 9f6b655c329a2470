#include "pmflow/decompose.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pmflow {

const char* to_string(TxKind kind) {
    switch (kind) {
    case TxKind::PureExchange: return "PureExchange";
    case TxKind::ShareMinting: return "ShareMinting";
    case TxKind::ShareBurning: return "ShareBurning";
    case TxKind::MixedMint: return "MixedMint";
    case TxKind::MixedBurn: return "MixedBurn";
    }
    return "?";
}

TxKind tx_kind_from_string(std::string_view name) {
    for (TxKind k : {TxKind::PureExchange, TxKind::ShareMinting, TxKind::ShareBurning, TxKind::MixedMint, TxKind::MixedBurn})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown transaction kind: " + std::string(name));
}

namespace {

Micro checked_add(Micro a, Micro b, TxKey key) {
    Micro out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw DecompositionAnomaly(key, "amount sum overflows 64 bits");
    return out;
}

// Per-token gross flows and the asset-id sets the classification rules look at.
struct FlowTally {
    std::map<std::string, Micro> bought; // B(a): USDC paid by makers receiving token a
    std::map<std::string, Micro> sold;   // S(a): USDC paid to makers delivering token a
    std::set<std::string> buyTargets;    // {t_i | m_i = 0}
    std::set<std::string> sellSources;   // {m_i | t_i = 0}
    std::set<std::string> makerIds;      // {m_i}
    std::set<std::string> takerIds;      // {t_i}
    Micro buy = 0;
    Micro sell = 0;
};

FlowTally tally(const Transaction& tx) {
    FlowTally t;
    const TxKey key = tx.key();
    for (const auto& f : tx.fills) {
        t.makerIds.insert(f.makerAssetId);
        t.takerIds.insert(f.takerAssetId);
        if (f.maker_buys()) {
            t.buyTargets.insert(f.takerAssetId);
            t.bought[f.takerAssetId] = checked_add(t.bought[f.takerAssetId], f.makerAmountFilled, key);
            t.buy = checked_add(t.buy, f.makerAmountFilled, key);
        } else {
            t.sellSources.insert(f.makerAssetId);
            t.sold[f.makerAssetId] = checked_add(t.sold[f.makerAssetId], f.takerAmountFilled, key);
            t.sell = checked_add(t.sell, f.takerAmountFilled, key);
        }
    }
    return t;
}

void check_market(const Transaction& tx, const MarketSpec& market) {
    for (const auto& f : tx.fills) {
        const auto& token = f.token_id();
        if (!market.has_token(token))
            throw WrongMarketError("transaction (block " + std::to_string(tx.block) + ", txIndex " +
                                   std::to_string(tx.txIndex) + ") references token " + token +
                                   " outside market '" + market.candidate + "'");
    }
}

TxKind kind_of(const FlowTally& t) {
    if (t.buy > t.sell) return t.makerIds.size() > 1 ? TxKind::MixedMint : TxKind::ShareMinting;
    if (t.buy < t.sell) return t.takerIds.size() > 1 ? TxKind::MixedBurn : TxKind::ShareBurning;
    return TxKind::PureExchange;
}

Micro& trade_slot(VolumeComponents& c, Side s) { return s == Side::Yes ? c.yesTrade : c.noTrade; }
Micro& mint_slot(VolumeComponents& c, Side s) { return s == Side::Yes ? c.yesMint : c.noMint; }
Micro& burn_slot(VolumeComponents& c, Side s) { return s == Side::Yes ? c.yesBurn : c.noBurn; }

Micro lookup(const std::map<std::string, Micro>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
}

} // namespace

GrossFlows gross_flows(const Transaction& tx) {
    const FlowTally t = tally(tx);
    return {t.buy, t.sell};
}

TxKind classify_transaction(const Transaction& tx, const MarketSpec& market) {
    check_market(tx, market);
    return kind_of(tally(tx));
}

Decomposition decompose_detailed(const Transaction& tx, const MarketSpec& market) {
    check_market(tx, market);
    const FlowTally t = tally(tx);
    const TxKey key = tx.key();
    Decomposition out;
    out.kind = kind_of(t);
    VolumeComponents& c = out.components;
    c.buyVol = t.buy;
    c.sellVol = t.sell;
    const Micro tradeVol = std::min(t.buy, t.sell);

    auto side_of = [&](const std::string& token) { return token == market.yesTokenId ? Side::Yes : Side::No; };
    auto other = [](Side s) { return s == Side::Yes ? Side::No : Side::Yes; };
    // a^buy / a^sell: deterministic choice of the lexicographically smallest candidate. The
    // choice only matters when there is trade volume to assign.
    auto pick = [&](const std::set<std::string>& candidates) -> const std::string& {
        if (candidates.size() > 1 && tradeVol > 0) out.tieBreak = true;
        return *candidates.begin();
    };

    if (t.buy != t.sell && t.buyTargets.size() > 1 && t.sellSources.size() > 1)
        throw DecompositionAnomaly(key, "both complementary tokens appear on the buy and the sell side "
                                        "(simultaneous minting and burning)");

    if (t.buy > t.sell) {
        const std::string& star = out.kind == TxKind::MixedMint ? pick(t.sellSources) : pick(t.buyTargets);
        const Side s = side_of(star);
        const std::string& bar = market.token(other(s));
        const Micro mintStar = lookup(t.bought, star) - tradeVol;
        if (mintStar < 0)
            throw DecompositionAnomaly(key, "mint volume of token " + star + " would be negative (" +
                                                format_micro(mintStar) + ")");
        trade_slot(c, s) = tradeVol;
        mint_slot(c, s) = mintStar;
        mint_slot(c, other(s)) = lookup(t.bought, bar);
    } else if (t.buy < t.sell) {
        const std::string& star = out.kind == TxKind::MixedBurn ? pick(t.buyTargets) : pick(t.sellSources);
        const Side s = side_of(star);
        const std::string& bar = market.token(other(s));
        const Micro burnStar = lookup(t.sold, star) - tradeVol;
        if (burnStar < 0)
            throw DecompositionAnomaly(key, "burn volume of token " + star + " would be negative (" +
                                                format_micro(burnStar) + ")");
        trade_slot(c, s) = tradeVol;
        burn_slot(c, s) = burnStar;
        burn_slot(c, other(s)) = lookup(t.sold, bar);
    } else if (!t.buyTargets.empty()) {
        const std::string& star = pick(t.buyTargets);
        trade_slot(c, side_of(star)) = tradeVol;
    }
    return out;
}

VolumeComponents decompose_transaction(const Transaction& tx, const MarketSpec& market) {
    return decompose_detailed(tx, market).components;
}

Transaction restrict_to_market(const Transaction& tx, const MarketSpec& market) {
    Transaction out;
    out.block = tx.block;
    out.txIndex = tx.txIndex;
    out.timestamp = tx.timestamp;
    for (const auto& f : tx.fills)
        if (market.has_token(f.token_id())) out.fills.push_back(f);
    return out;
}

LedgerDecomposition decompose_ledger(const std::vector<Transaction>& txs, const std::vector<MarketSpec>& markets) {
    LedgerDecomposition out;
    for (const auto& tx : txs) {
        bool touched = false;
        for (const auto& market : markets) {
            Transaction part = restrict_to_market(tx, market);
            if (part.fills.empty()) continue;
            touched = true;
            ++out.units;
            try {
                Decomposition d = decompose_detailed(part, market);
                if (d.tieBreak) ++out.tieBreaks;
                out.rows.push_back({tx.block, tx.txIndex, tx.timestamp, market.candidate, d.kind, d.components, d.tieBreak});
            } catch (const DecompositionAnomaly& e) {
                out.quarantined.push_back({tx.block, tx.txIndex, tx.timestamp, market.candidate, e.reason()});
            }
        }
        if (!touched) {
            ++out.units;
            out.quarantined.push_back({tx.block, tx.txIndex, tx.timestamp, "", "no configured market owns its tokens"});
        }
    }
    return out;
}

std::string decomposed_csv_header() {
    return "block,txIndex,timestamp,market,kind,buyVol,sellVol,yesTradeVol,noTradeVol,yesMintVol,noMintVol,yesBurnVol,"
           "noBurnVol";
}

std::string to_csv_row(const DecomposedTx& r) {
    const auto& c = r.components;
    std::ostringstream os;
    os << r.block << ',' << r.txIndex << ',' << r.timestamp << ',' << r.market << ',' << to_string(r.kind) << ','
       << c.buyVol << ',' << c.sellVol << ',' << c.yesTrade << ',' << c.noTrade << ',' << c.yesMint << ',' << c.noMint
       << ',' << c.yesBurn << ',' << c.noBurn;
    return os.str();
}

std::vector<DecomposedTx> read_decomposed_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != decomposed_csv_header())
        throw ParseError(1, path.string() + ": unexpected decomposed-ledger header");
    std::vector<DecomposedTx> rows;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 13) throw ParseError(lineNo, "expected 13 columns, found " + std::to_string(f.size()));
        try {
            DecomposedTx r;
            r.block = static_cast<std::uint64_t>(parse_micro_integer(f[0]));
            r.txIndex = static_cast<std::uint64_t>(parse_micro_integer(f[1]));
            r.timestamp = std::stoll(f[2]);
            r.market = f[3];
            r.kind = tx_kind_from_string(f[4]);
            auto& c = r.components;
            Micro* slots[] = {&c.buyVol, &c.sellVol, &c.yesTrade, &c.noTrade, &c.yesMint, &c.noMint, &c.yesBurn, &c.noBurn};
            for (std::size_t i = 0; i < 8; ++i) *slots[i] = parse_micro_integer(f[5 + i]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw ParseError(lineNo, std::string("bad decomposed row: ") + e.what());
        }
    }
    return rows;
}

} // namespace pmflow
