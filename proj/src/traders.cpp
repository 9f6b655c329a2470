#include "pmflow/traders.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

namespace pmflow {

std::vector<TokenMarket> token_markets(const std::vector<MarketSpec>& markets) {
    std::vector<TokenMarket> out;
    for (const auto& m : markets) {
        out.push_back({m.candidate, Side::Yes, m.yesTokenId});
        out.push_back({m.candidate, Side::No, m.noTokenId});
    }
    return out;
}

std::size_t TraderActivity::trades() const {
    std::size_t n = 0;
    for (const auto& [_, s] : perToken) n += s.trades;
    return n;
}

Micro TraderActivity::volume() const {
    Micro v = 0;
    for (const auto& [_, s] : perToken) v += s.volume;
    return v;
}

namespace {

std::unordered_map<std::string, std::size_t> token_index(const std::vector<TokenMarket>& tokens) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!idx.emplace(tokens[i].tokenId, i).second)
            throw ConfigError("token " + tokens[i].tokenId + " listed twice");
    }
    return idx;
}

bool counted(const std::string& address, const std::set<std::string>& excluded) {
    return !address.empty() && !excluded.count(address);
}

struct TxParticipation {
    Micro makerUsdc = 0;
    Micro takerUsdc = 0;
    bool maker = false;
};

} // namespace

std::vector<TraderActivity> trader_activity(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                            UnixSeconds from, UnixSeconds to, const std::set<std::string>& excluded) {
    const auto idx = token_index(tokens);
    std::map<std::string, TraderActivity> acc;
    for (const auto& tx : txs) {
        if (tx.timestamp < from || tx.timestamp >= to) continue;
        std::map<std::pair<std::string, std::string>, TxParticipation> part; // (address, token)
        for (const auto& f : tx.fills) {
            const std::string& token = f.token_id();
            if (!idx.count(token)) continue;
            if (counted(f.maker, excluded)) {
                auto& p = part[{f.maker, token}];
                p.maker = true;
                p.makerUsdc += f.usdc_amount();
            }
            if (counted(f.taker, excluded)) part[{f.taker, token}].takerUsdc += f.usdc_amount();
        }
        for (const auto& [key, p] : part) {
            auto& a = acc[key.first];
            a.address = key.first;
            auto [it, fresh] = a.perToken.try_emplace(key.second);
            auto& s = it->second;
            if (fresh) s.first = tx.timestamp;
            s.first = std::min(s.first, tx.timestamp);
            s.last = std::max(s.last, tx.timestamp);
            s.trades += 1;
            s.volume += p.maker ? p.makerUsdc : p.takerUsdc;
        }
    }
    std::vector<TraderActivity> out;
    out.reserve(acc.size());
    for (auto& [_, a] : acc) out.push_back(std::move(a));
    return out;
}

std::array<double, 24> hourly_active_traders(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                             UnixSeconds from, UnixSeconds to, const std::set<std::string>& excluded,
                                             HourlyCountMode mode, const std::set<std::string>& only) {
    if (to <= from) throw ConfigError("empty window for hourly trader profile");
    const auto idx = token_index(tokens);
    // (hour-of-epoch, token slot, address); token slot is 0 in distinct mode.
    std::set<std::tuple<UnixSeconds, std::size_t, std::string>> seen;
    for (const auto& tx : txs) {
        if (tx.timestamp < from || tx.timestamp >= to) continue;
        const UnixSeconds hour = floor_hour(tx.timestamp);
        for (const auto& f : tx.fills) {
            auto it = idx.find(f.token_id());
            if (it == idx.end()) continue;
            const std::size_t slot = mode == HourlyCountMode::PerMarket ? it->second : 0;
            for (const std::string* addr : {&f.maker, &f.taker}) {
                if (!counted(*addr, excluded)) continue;
                if (!only.empty() && !only.count(*addr)) continue;
                seen.emplace(hour, slot, *addr);
            }
        }
    }
    std::array<double, 24> counts{};
    for (const auto& [hour, slot, addr] : seen) counts[static_cast<std::size_t>((hour - floor_day(hour)) / kSecondsPerHour)] += 1.0;
    const double days = static_cast<double>((floor_day(to - 1) - floor_day(from)) / kSecondsPerDay + 1);
    for (double& c : counts) c /= days;
    return counts;
}

std::vector<std::string> top_decile_traders(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                            TraderRanking by, UnixSeconds from, UnixSeconds to,
                                            const std::set<std::string>& excluded) {
    struct Ranked {
        std::string address;
        std::size_t trades;
        Micro volume;
    };
    std::vector<Ranked> ranked;
    for (const auto& a : trader_activity(txs, tokens, from, to, excluded)) ranked.push_back({a.address, 0, a.volume()});
    // Frequency counts distinct transactions, not per-token participations.
    {
        const auto idx = token_index(tokens);
        std::map<std::string, std::size_t> freq;
        for (const auto& tx : txs) {
            if (tx.timestamp < from || tx.timestamp >= to) continue;
            std::set<std::string> present;
            for (const auto& f : tx.fills) {
                if (!idx.count(f.token_id())) continue;
                if (counted(f.maker, excluded)) present.insert(f.maker);
                if (counted(f.taker, excluded)) present.insert(f.taker);
            }
            for (const auto& a : present) ++freq[a];
        }
        for (auto& r : ranked) r.trades = freq[r.address];
    }
    if (ranked.size() < 10)
        throw DataError("top-decile ranking needs at least 10 active traders, found " + std::to_string(ranked.size()));
    std::sort(ranked.begin(), ranked.end(), [by](const Ranked& a, const Ranked& b) {
        if (by == TraderRanking::Frequency) {
            if (a.trades != b.trades) return a.trades > b.trades;
        } else if (a.volume != b.volume) {
            return a.volume > b.volume;
        }
        return a.address < b.address;
    });
    const std::size_t k = (ranked.size() + 9) / 10;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].address);
    return out;
}

ParticipationReport participation_sets(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                       const std::set<std::string>& excluded) {
    if (tokens.size() > 64) throw ConfigError("participation sets support at most 64 token markets");
    const auto idx = token_index(tokens);
    ParticipationReport r;
    for (const auto& t : tokens) {
        r.labels.push_back(t.label());
        if (std::find(r.candidateLabels.begin(), r.candidateLabels.end(), t.candidate) == r.candidateLabels.end())
            r.candidateLabels.push_back(t.candidate);
    }
    if (r.candidateLabels.size() > 64) throw ConfigError("participation sets support at most 64 candidates");
    std::vector<std::size_t> candidateOf;
    for (const auto& t : tokens)
        candidateOf.push_back(static_cast<std::size_t>(
            std::find(r.candidateLabels.begin(), r.candidateLabels.end(), t.candidate) - r.candidateLabels.begin()));

    std::map<std::string, std::uint64_t> masks;
    for (const auto& tx : txs) {
        for (const auto& f : tx.fills) {
            auto it = idx.find(f.token_id());
            if (it == idx.end()) continue;
            const std::uint64_t bit = std::uint64_t{1} << it->second;
            if (counted(f.maker, excluded)) masks[f.maker] |= bit;
            if (counted(f.taker, excluded)) masks[f.taker] |= bit;
        }
    }
    r.totalTraders = masks.size();
    std::map<std::uint64_t, std::size_t> cells, candidateCells;
    r.marginalCounts.assign(tokens.size(), 0);
    for (const auto& [_, m] : masks) {
        ++cells[m];
        std::uint64_t cm = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (m >> i & 1u) {
                ++r.marginalCounts[i];
                cm |= std::uint64_t{1} << candidateOf[i];
            }
        }
        ++candidateCells[cm];
    }
    const double total = static_cast<double>(r.totalTraders);
    auto pct = [total](std::size_t n) { return total > 0 ? 100.0 * static_cast<double>(n) / total : 0.0; };
    auto sorted = [&](const std::map<std::uint64_t, std::size_t>& src) {
        std::vector<ParticipationCell> v;
        for (const auto& [mask, n] : src) v.push_back({mask, n, pct(n)});
        std::stable_sort(v.begin(), v.end(),
                         [](const ParticipationCell& a, const ParticipationCell& b) { return a.traders > b.traders; });
        return v;
    };
    r.cells = sorted(cells);
    r.candidateCells = sorted(candidateCells);
    for (std::size_t n : r.marginalCounts) r.marginalPct.push_back(pct(n));
    return r;
}

std::pair<UnixSeconds, UnixSeconds> quarter_window(int year, int q, UnixSeconds sampleFrom, UnixSeconds sampleTo) {
    if (q < 1 || q > 4) throw ConfigError("quarter must be 1-4");
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-01", year, 3 * (q - 1) + 1);
    UnixSeconds start = parse_utc(buf);
    UnixSeconds end = start;
    for (int i = 0; i < 3; ++i) end = next_month(end);
    start = std::max(start, sampleFrom);
    end = std::min(end, sampleTo);
    if (start >= end) throw ConfigError("quarter " + std::to_string(year) + "Q" + std::to_string(q) + " is outside the sample");
    return {start, end};
}

} // namespace pmflow
