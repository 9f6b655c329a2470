#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmflow/common.hpp"

namespace pmflow {

class InsufficientHoldings : public Error {
public:
    using Error::Error;
};

/// N mutually exclusive outcomes, exactly one of which resolves YES. Binary markets are N = 2.
class CategoricalMarket {
public:
    explicit CategoricalMarket(std::size_t outcomes);
    explicit CategoricalMarket(std::vector<std::string> labels);

    std::size_t outcomes() const { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

private:
    std::vector<std::string> labels_;
};

/// Share holdings per (outcome, side) and USDC cash, all in micro units.
struct Portfolio {
    std::map<std::pair<std::size_t, Side>, Micro> holdings;
    Micro cash = 0;

    Micro shares(std::size_t outcome, Side side) const;
    void add(std::size_t outcome, Side side, Micro quantity);
    /// Drops zero entries so equal positions compare equal.
    bool operator==(const Portfolio& other) const;
};

/// Each YES share of the winner and each NO share of a loser pays one USDC; cash is added.
Micro payoff_at_resolution(const Portfolio& portfolio, const CategoricalMarket& market, std::size_t winner);

/// Turns `quantity` NO shares of each outcome in `outcomes` (M of them, 1 <= M < N) into
/// `quantity` YES shares of each remaining outcome plus (M - 1) * quantity USDC.
Portfolio convert_positions(const Portfolio& portfolio, std::span<const std::size_t> outcomes, Micro quantity,
                            const CategoricalMarket& market);

/// Locks `quantity` USDC for `quantity` YES and `quantity` NO shares of `outcome`.
Portfolio split_position(const Portfolio& portfolio, std::size_t outcome, Micro quantity,
                         const CategoricalMarket& market);

/// Burns `quantity` full sets of `outcome` to reclaim `quantity` USDC.
Portfolio merge_positions(const Portfolio& portfolio, std::size_t outcome, Micro quantity,
                          const CategoricalMarket& market);

} // namespace pmflow
