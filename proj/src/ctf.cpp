#include "pmflow/ctf.hpp"

#include <set>

namespace pmflow {

CategoricalMarket::CategoricalMarket(std::size_t outcomes) {
    if (outcomes < 2) throw std::invalid_argument("a categorical market needs at least 2 outcomes");
    for (std::size_t i = 0; i < outcomes; ++i) labels_.push_back(std::string(1, static_cast<char>('A' + i % 26)) +
                                                               (i >= 26 ? std::to_string(i / 26) : ""));
}

CategoricalMarket::CategoricalMarket(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw std::invalid_argument("a categorical market needs at least 2 outcomes");
}

Micro Portfolio::shares(std::size_t outcome, Side side) const {
    auto it = holdings.find({outcome, side});
    return it == holdings.end() ? 0 : it->second;
}

void Portfolio::add(std::size_t outcome, Side side, Micro quantity) {
    Micro& slot = holdings[{outcome, side}];
    slot += quantity;
    if (slot < 0) throw InsufficientHoldings("negative share balance");
    if (slot == 0) holdings.erase({outcome, side});
}

bool Portfolio::operator==(const Portfolio& other) const {
    auto nonzero = [](const Portfolio& p) {
        std::map<std::pair<std::size_t, Side>, Micro> m;
        for (const auto& [k, v] : p.holdings)
            if (v != 0) m.emplace(k, v);
        return m;
    };
    return cash == other.cash && nonzero(*this) == nonzero(other);
}

namespace {

void check_outcome(std::size_t outcome, const CategoricalMarket& market) {
    if (outcome >= market.outcomes()) throw std::out_of_range("outcome index outside the market");
}

void check_holdings(const Portfolio& p, const CategoricalMarket& market) {
    for (const auto& [key, q] : p.holdings) {
        check_outcome(key.first, market);
        if (q < 0) throw InsufficientHoldings("negative share balance");
    }
}

} // namespace

Micro payoff_at_resolution(const Portfolio& portfolio, const CategoricalMarket& market, std::size_t winner) {
    check_outcome(winner, market);
    check_holdings(portfolio, market);
    Micro total = portfolio.cash;
    for (const auto& [key, q] : portfolio.holdings) {
        const bool wins = key.first == winner;
        if ((wins && key.second == Side::Yes) || (!wins && key.second == Side::No)) total += q;
    }
    return total;
}

Portfolio convert_positions(const Portfolio& portfolio, std::span<const std::size_t> outcomes, Micro quantity,
                            const CategoricalMarket& market) {
    const std::set<std::size_t> chosen(outcomes.begin(), outcomes.end());
    if (chosen.size() != outcomes.size()) throw std::invalid_argument("conversion outcomes must be distinct");
    if (chosen.empty()) throw std::invalid_argument("conversion needs at least one outcome");
    for (std::size_t o : chosen) check_outcome(o, market);
    if (chosen.size() == market.outcomes())
        throw std::invalid_argument("cannot convert NO shares of every outcome: no outcomes remain");
    if (quantity < 0) throw std::invalid_argument("quantity must be non-negative");
    for (std::size_t o : chosen)
        if (portfolio.shares(o, Side::No) < quantity)
            throw InsufficientHoldings("not enough NO shares of outcome " + market.label(o) + " to convert");
    Portfolio out = portfolio;
    if (quantity == 0) return out;
    for (std::size_t o : chosen) out.add(o, Side::No, -quantity);
    for (std::size_t o = 0; o < market.outcomes(); ++o)
        if (!chosen.count(o)) out.add(o, Side::Yes, quantity);
    out.cash += static_cast<Micro>(chosen.size() - 1) * quantity;
    return out;
}

Portfolio split_position(const Portfolio& portfolio, std::size_t outcome, Micro quantity,
                         const CategoricalMarket& market) {
    check_outcome(outcome, market);
    if (quantity < 0) throw std::invalid_argument("quantity must be non-negative");
    if (portfolio.cash < quantity) throw InsufficientHoldings("not enough collateral to split");
    Portfolio out = portfolio;
    out.cash -= quantity;
    out.add(outcome, Side::Yes, quantity);
    out.add(outcome, Side::No, quantity);
    return out;
}

Portfolio merge_positions(const Portfolio& portfolio, std::size_t outcome, Micro quantity,
                          const CategoricalMarket& market) {
    check_outcome(outcome, market);
    if (quantity < 0) throw std::invalid_argument("quantity must be non-negative");
    if (portfolio.shares(outcome, Side::Yes) < quantity || portfolio.shares(outcome, Side::No) < quantity)
        throw InsufficientHoldings("not enough complementary shares to merge");
    Portfolio out = portfolio;
    out.add(outcome, Side::Yes, -quantity);
    out.add(outcome, Side::No, -quantity);
    out.cash += quantity;
    return out;
}

} // namespace pmflow
