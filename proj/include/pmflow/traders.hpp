#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pmflow/ledger.hpp"

namespace pmflow {

/// A token market: one side of one candidate market.
struct TokenMarket {
    std::string candidate;
    Side side = Side::Yes;
    std::string tokenId;

    std::string label() const { return candidate + " " + to_string(side); }
};

/// YES then NO for each market, in config order.
std::vector<TokenMarket> token_markets(const std::vector<MarketSpec>& markets);

struct TraderTokenStats {
    std::size_t trades = 0; ///< transactions participated in
    Micro volume = 0;       ///< own USDC paid or received
    UnixSeconds first = 0;
    UnixSeconds last = 0;
};

struct TraderActivity {
    std::string address;
    std::map<std::string, TraderTokenStats> perToken; ///< keyed by token id

    std::size_t trades() const;
    Micro volume() const;
};

/// Per-trader activity over [from, to) on the given tokens. A trader's volume in a transaction is
/// the USDC of the fills where they are the maker, or of the fills where they are the taker when
/// they made none (so an aggregate fill and its matched legs are not counted twice).
std::vector<TraderActivity> trader_activity(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                            UnixSeconds from, UnixSeconds to, const std::set<std::string>& excluded);

enum class HourlyCountMode {
    Distinct,  ///< distinct addresses across all selected tokens
    PerMarket, ///< distinct per token market, summed
};

/// Mean, over the UTC days intersecting [from, to), of unique active addresses in each UTC hour.
/// `only` restricts counting to a given trader set when non-empty.
std::array<double, 24> hourly_active_traders(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                             UnixSeconds from, UnixSeconds to, const std::set<std::string>& excluded,
                                             HourlyCountMode mode = HourlyCountMode::Distinct,
                                             const std::set<std::string>& only = {});

enum class TraderRanking { Frequency, Volume };

/// The ceil(n / 10) highest ranked addresses; ties go to the lexicographically smaller address.
std::vector<std::string> top_decile_traders(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                            TraderRanking by, UnixSeconds from, UnixSeconds to,
                                            const std::set<std::string>& excluded);

struct ParticipationCell {
    std::uint64_t mask = 0; ///< bit i set = active in market i
    std::size_t traders = 0;
    double sharePct = 0.0;
};

struct ParticipationReport {
    std::vector<std::string> labels; ///< one per bit
    std::vector<ParticipationCell> cells;
    std::vector<std::size_t> marginalCounts;
    std::vector<double> marginalPct;
    std::vector<std::string> candidateLabels;
    std::vector<ParticipationCell> candidateCells; ///< YES and NO of a candidate combined
    std::size_t totalTraders = 0;
};

/// Exact-subset decomposition of all active traders across the token markets. Cells are sorted
/// by descending count, then mask.
ParticipationReport participation_sets(const std::vector<Transaction>& txs, const std::vector<TokenMarket>& tokens,
                                       const std::set<std::string>& excluded);

/// Calendar quarter `q` (1-4) of `year` intersected with [sampleFrom, sampleTo).
std::pair<UnixSeconds, UnixSeconds> quarter_window(int year, int q, UnixSeconds sampleFrom, UnixSeconds sampleTo);

} // namespace pmflow
