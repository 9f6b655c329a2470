#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pmflow/ledger.hpp"

namespace pmflow {

enum class TxKind { PureExchange, ShareMinting, ShareBurning, MixedMint, MixedBurn };

const char* to_string(TxKind kind);
TxKind tx_kind_from_string(std::string_view name);

/// Per-transaction volume split, all in micro-USDC.
struct VolumeComponents {
    Micro yesTrade = 0;
    Micro noTrade = 0;
    Micro yesMint = 0;
    Micro noMint = 0;
    Micro yesBurn = 0;
    Micro noBurn = 0;
    Micro buyVol = 0;
    Micro sellVol = 0;

    Micro trade(Side s) const { return s == Side::Yes ? yesTrade : noTrade; }
    Micro mint(Side s) const { return s == Side::Yes ? yesMint : noMint; }
    Micro burn(Side s) const { return s == Side::Yes ? yesBurn : noBurn; }

    bool operator==(const VolumeComponents&) const = default;
};

struct GrossFlows {
    Micro buyVol = 0;
    Micro sellVol = 0;
};

/// Transaction shape outside the exchange/mint/burn taxonomy.
class DecompositionAnomaly : public DataError {
public:
    DecompositionAnomaly(TxKey key, const std::string& why)
        : DataError("transaction (block " + std::to_string(key.block) + ", txIndex " + std::to_string(key.txIndex) +
                    "): " + why),
          key_(key), reason_(why) {}
    TxKey key() const { return key_; }
    const std::string& reason() const { return reason_; }

private:
    TxKey key_;
    std::string reason_;
};

/// buyVol sums makerAmountFilled over maker-pays-USDC fills; sellVol sums takerAmountFilled
/// over taker-pays-USDC fills.
GrossFlows gross_flows(const Transaction& tx);

/// Throws WrongMarketError when a fill references a token outside `market`.
TxKind classify_transaction(const Transaction& tx, const MarketSpec& market);

VolumeComponents decompose_transaction(const Transaction& tx, const MarketSpec& market);

/// Detailed decomposition result. `tieBreak` is set when the receiving token was chosen among
/// several candidates (lexicographically smallest id wins).
struct Decomposition {
    TxKind kind = TxKind::PureExchange;
    VolumeComponents components;
    bool tieBreak = false;
};

Decomposition decompose_detailed(const Transaction& tx, const MarketSpec& market);

/// The fills of `tx` that touch `market`'s tokens.
Transaction restrict_to_market(const Transaction& tx, const MarketSpec& market);

struct DecomposedTx {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    UnixSeconds timestamp = 0;
    std::string market;
    TxKind kind = TxKind::PureExchange;
    VolumeComponents components;
    bool tieBreak = false;
};

struct QuarantinedTx {
    std::uint64_t block = 0;
    std::uint64_t txIndex = 0;
    UnixSeconds timestamp = 0;
    /// Empty when the transaction touched no configured market.
    std::string market;
    std::string reason;
};

/// Decomposition over a ledger. Units are (transaction, market) pairs; a transaction touching
/// no configured market is one quarantined unit. decomposed + quarantined == units.
struct LedgerDecomposition {
    std::vector<DecomposedTx> rows;
    std::vector<QuarantinedTx> quarantined;
    std::size_t units = 0;
    std::size_t tieBreaks = 0;
};

LedgerDecomposition decompose_ledger(const std::vector<Transaction>& txs, const std::vector<MarketSpec>& markets);

std::string decomposed_csv_header();
std::string to_csv_row(const DecomposedTx& row);

/// Reads a file written with decomposed_csv_header() / to_csv_row().
std::vector<DecomposedTx> read_decomposed_csv(const std::filesystem::path& path);

} // namespace pmflow
