#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pmflow/common.hpp"

namespace pmflow {

/// One OrderFilled record. Amounts are exact integers in 10^-6 units: micro-USDC when the
/// corresponding asset id is "0", micro-shares otherwise.
struct FillEvent {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    std::uint64_t logIndex = 0;
    std::string maker;
    std::string taker;
    std::string makerAssetId;
    std::string takerAssetId;
    Micro makerAmountFilled = 0;
    Micro takerAmountFilled = 0;
    UnixSeconds timestamp = 0;

    /// Maker pays collateral and receives the outcome token.
    bool maker_buys() const { return makerAssetId == kCollateralAssetId; }
    const std::string& token_id() const { return maker_buys() ? takerAssetId : makerAssetId; }
    Micro usdc_amount() const { return maker_buys() ? makerAmountFilled : takerAmountFilled; }
    Micro share_amount() const { return maker_buys() ? takerAmountFilled : makerAmountFilled; }

    bool operator==(const FillEvent&) const = default;
};

struct TxKey {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    auto operator<=>(const TxKey&) const = default;
};

/// All fills sharing (block, txIndex), ordered by logIndex.
struct Transaction {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    UnixSeconds timestamp = 0;
    std::vector<FillEvent> fills;

    TxKey key() const { return {block, txIndex}; }
};

struct MarketSpec {
    std::string candidate;
    std::string yesTokenId;
    std::string noTokenId;
    UnixSeconds launch = 0;
    std::optional<UnixSeconds> resolution;

    bool has_token(std::string_view id) const { return id == yesTokenId || id == noTokenId; }
    const std::string& token(Side s) const { return s == Side::Yes ? yesTokenId : noTokenId; }
};

/// Everything a market config document carries.
struct MarketConfig {
    std::vector<MarketSpec> markets;
    /// Exchange and adapter contract addresses (takers of aggregate fills).
    std::set<std::string> exchangeAddresses;

    const MarketSpec* find_market(std::string_view candidate) const;
    /// Market owning the token, with the token's side.
    std::optional<std::pair<const MarketSpec*, Side>> find_token(std::string_view tokenId) const;
};

/// Transactions restricted to [start, end).
struct LedgerWindow {
    std::vector<Transaction> transactions;
    UnixSeconds start = 0;
    UnixSeconds end = 0;
};

enum class RecordFormat { Jsonl, Csv };

/// Column order of a CSV fill file, read from its header.
class CsvLayout {
public:
    /// Layout with the canonical column order.
    CsvLayout();
    static CsvLayout from_header(std::string_view header);
    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t width() const { return width_; }

private:
    std::map<std::string, std::size_t, std::less<>> index_;
    std::size_t width_ = 0;
};

inline constexpr const char* kFillColumns[] = {"block",        "txIndex",      "logIndex",          "maker",
                                               "taker",        "makerAssetId", "takerAssetId",      "makerAmountFilled",
                                               "takerAmountFilled", "timestamp"};

/// Parses a single record. A missing timestamp is permitted only when `timestampOptional` is set
/// (a block-time sidecar supplies it later); it is then left as -1.
FillEvent parse_fill_record(std::string_view record, RecordFormat format, std::size_t lineNumber = 1,
                            const CsvLayout& layout = CsvLayout{}, bool timestampOptional = false);

std::string serialize_fill(const FillEvent& fill, RecordFormat format);
std::string csv_header();

/// Reads a .jsonl or .csv file of fills. `blockTimes` fills in or cross-checks timestamps.
std::vector<FillEvent> read_fills(const std::filesystem::path& path,
                                  const std::map<std::uint64_t, UnixSeconds>* blockTimes = nullptr);

/// Sidecar CSV "block,timestamp" (timestamp as integer seconds or ISO-8601).
std::map<std::uint64_t, UnixSeconds> read_block_times(const std::filesystem::path& path);

/// Reads several shards concurrently and merges them by (block, txIndex, logIndex).
std::vector<FillEvent> read_fill_shards(const std::vector<std::filesystem::path>& paths,
                                        const std::map<std::uint64_t, UnixSeconds>* blockTimes = nullptr,
                                        unsigned workers = 1);

std::vector<Transaction> group_transactions(std::vector<FillEvent> fills);

LedgerWindow make_window(const std::vector<Transaction>& txs, UnixSeconds start, UnixSeconds end);

MarketConfig parse_market_config(std::string_view jsonText);
MarketConfig load_market_config(const std::filesystem::path& path);

} // namespace pmflow
