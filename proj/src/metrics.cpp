#include "pmflow/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pmflow {

Partition partition_from_string(std::string_view name) {
    if (name == "hour") return Partition::Hour;
    if (name == "day") return Partition::Day;
    if (name == "month") return Partition::Month;
    throw std::invalid_argument("partition must be hour, day or month: " + std::string(name));
}

const char* to_string(Partition p) {
    switch (p) {
    case Partition::Hour: return "hour";
    case Partition::Day: return "day";
    case Partition::Month: return "month";
    }
    return "?";
}

UnixSeconds interval_start(UnixSeconds t, Partition p) {
    switch (p) {
    case Partition::Hour: return floor_hour(t);
    case Partition::Day: return floor_day(t);
    case Partition::Month: return floor_month(t);
    }
    return t;
}

UnixSeconds interval_end(UnixSeconds start, Partition p) {
    switch (p) {
    case Partition::Hour: return start + kSecondsPerHour;
    case Partition::Day: return start + kSecondsPerDay;
    case Partition::Month: return next_month(start);
    }
    return start;
}

Micro exchange_equivalent_volume(const SideTotals& t) { return t.trade + std::min(t.mint, t.burn); }

Micro net_inflow(const SideTotals& t) { return t.mint - t.burn; }

Micro gross_activity(const SideTotals& t) { return t.trade + std::max(t.mint, t.burn); }

SideMeasures measure(const SideTotals& t) {
    return {exchange_equivalent_volume(t), net_inflow(t), gross_activity(t)};
}

MarketMeasures market_measures(const IntervalTotals& totals) {
    MarketMeasures m;
    m.start = totals.start;
    m.end = totals.end;
    m.yes = measure(totals.yes);
    m.no = measure(totals.no);
    m.combined = {m.yes.vE + m.no.vE, m.yes.f + m.no.f, m.yes.vG + m.no.vG};
    return m;
}

std::vector<IntervalTotals> aggregate_components(const std::vector<DecomposedTx>& rows, Partition partition,
                                                 const std::string& market, std::optional<DenseRange> dense) {
    std::map<UnixSeconds, IntervalTotals> buckets;
    for (const auto& r : rows) {
        if (r.market != market) continue;
        if (dense && (r.timestamp < dense->from || r.timestamp >= dense->to)) continue;
        const UnixSeconds start = interval_start(r.timestamp, partition);
        auto& b = buckets[start];
        b.start = start;
        b.end = interval_end(start, partition);
        b.yes += {r.components.yesTrade, r.components.yesMint, r.components.yesBurn};
        b.no += {r.components.noTrade, r.components.noMint, r.components.noBurn};
        ++b.transactions;
    }
    if (dense) {
        if (dense->from >= dense->to) throw std::invalid_argument("empty aggregation range");
        for (UnixSeconds s = interval_start(dense->from, partition); s < dense->to; s = interval_end(s, partition)) {
            auto& b = buckets[s];
            b.start = s;
            b.end = interval_end(s, partition);
        }
    }
    std::vector<IntervalTotals> out;
    out.reserve(buckets.size());
    for (auto& [_, b] : buckets) out.push_back(b);
    return out;
}

IntervalTotals merge_totals(const std::vector<IntervalTotals>& parts) {
    IntervalTotals out;
    if (parts.empty()) return out;
    out.start = parts.front().start;
    out.end = parts.front().end;
    for (const auto& p : parts) {
        out.start = std::min(out.start, p.start);
        out.end = std::max(out.end, p.end);
        out.yes += p.yes;
        out.no += p.no;
        out.transactions += p.transactions;
    }
    return out;
}

} // namespace pmflow
