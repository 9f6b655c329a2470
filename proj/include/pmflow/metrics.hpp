#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmflow/decompose.hpp"

namespace pmflow {

enum class Partition { Hour, Day, Month };

Partition partition_from_string(std::string_view name);
const char* to_string(Partition p);

/// Start of the UTC-aligned interval containing `t`, and the start of the following one.
UnixSeconds interval_start(UnixSeconds t, Partition p);
UnixSeconds interval_end(UnixSeconds start, Partition p);

struct SideTotals {
    Micro trade = 0;
    Micro mint = 0;
    Micro burn = 0;

    SideTotals& operator+=(const SideTotals& o) {
        trade += o.trade;
        mint += o.mint;
        burn += o.burn;
        return *this;
    }
    bool operator==(const SideTotals&) const = default;
};

struct IntervalTotals {
    UnixSeconds start = 0;
    UnixSeconds end = 0;
    SideTotals yes;
    SideTotals no;
    std::size_t transactions = 0;

    const SideTotals& side(Side s) const { return s == Side::Yes ? yes : no; }
};

struct SideMeasures {
    Micro vE = 0; ///< exchange-equivalent volume
    Micro f = 0;  ///< net inflow (signed)
    Micro vG = 0; ///< gross activity
    bool operator==(const SideMeasures&) const = default;
};

/// trade + min(mint, burn)
Micro exchange_equivalent_volume(const SideTotals& t);
/// mint - burn
Micro net_inflow(const SideTotals& t);
/// trade + max(mint, burn), equal to vE + |f|
Micro gross_activity(const SideTotals& t);
SideMeasures measure(const SideTotals& t);

/// Per-side measures plus a candidate-level column. The combined measures are the sums of
/// the per-side measures (so vG == vE + |f| holds per side, not necessarily for the sum).
struct MarketMeasures {
    UnixSeconds start = 0;
    UnixSeconds end = 0;
    SideMeasures yes;
    SideMeasures no;
    SideMeasures combined;
};

MarketMeasures market_measures(const IntervalTotals& totals);

struct DenseRange {
    UnixSeconds from = 0;
    UnixSeconds to = 0; ///< exclusive
};

/// Sums components of `market`'s rows per interval. Without `dense` only non-empty intervals
/// are emitted; with it, every interval intersecting [from, to) is emitted (zeros included) and
/// rows outside the range are dropped.
std::vector<IntervalTotals> aggregate_components(const std::vector<DecomposedTx>& rows, Partition partition,
                                                 const std::string& market,
                                                 std::optional<DenseRange> dense = std::nullopt);

/// Totals over a union of intervals.
IntervalTotals merge_totals(const std::vector<IntervalTotals>& parts);

} // namespace pmflow
