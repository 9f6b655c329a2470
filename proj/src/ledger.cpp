#include "pmflow/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

namespace pmflow {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        std::string_view cell = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.push_back(cell);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

bool is_decimal_id(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
           (s.size() == 1 || s.front() != '0');
}

std::uint64_t to_u64(std::string_view s, std::size_t line, const char* field) {
    try {
        return static_cast<std::uint64_t>(parse_micro_integer(s));
    } catch (const std::exception&) {
        throw ParseError(line, std::string("field ") + field + " is not a non-negative integer: '" + std::string(s) + "'");
    }
}

Micro to_amount(std::string_view s, std::size_t line, const char* field) {
    try {
        return parse_micro_integer(s);
    } catch (const std::exception&) {
        throw ParseError(line, std::string("field ") + field + " is not an integer amount: '" + std::string(s) + "'");
    }
}

void validate(const FillEvent& f, std::size_t line) {
    if (!is_decimal_id(f.makerAssetId) || !is_decimal_id(f.takerAssetId))
        throw SchemaError("line " + std::to_string(line) + ": asset ids must be decimal strings");
    const bool makerZero = f.makerAssetId == kCollateralAssetId;
    const bool takerZero = f.takerAssetId == kCollateralAssetId;
    if (makerZero == takerZero)
        throw SchemaError("line " + std::to_string(line) + ": exactly one of makerAssetId/takerAssetId must be \"0\" (got \"" +
                          f.makerAssetId + "\", \"" + f.takerAssetId + "\")");
    if (f.maker.empty() || f.taker.empty()) throw SchemaError("line " + std::to_string(line) + ": empty address");
}

std::string json_text(const json& v, std::size_t line, const char* field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) {
        const auto x = v.get<std::int64_t>();
        if (x < 0) throw ParseError(line, std::string("field ") + field + " is negative");
        return std::to_string(x);
    }
    throw ParseError(line, std::string("field ") + field + " must be a string or integer");
}

FillEvent parse_jsonl(std::string_view record, std::size_t line, bool timestampOptional) {
    json j;
    try {
        j = json::parse(record);
    } catch (const json::parse_error& e) {
        throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(std::begin(kFillColumns), std::end(kFillColumns), [&](const char* c) { return key == c; }) ==
            std::end(kFillColumns))
            throw ParseError(line, "unexpected key '" + key + "'");
    }
    auto field = [&](const char* name) -> std::string {
        auto it = j.find(name);
        if (it == j.end()) throw ParseError(line, std::string("missing key '") + name + "'");
        return json_text(*it, line, name);
    };
    FillEvent f;
    f.block = to_u64(field("block"), line, "block");
    f.txIndex = to_u64(field("txIndex"), line, "txIndex");
    f.logIndex = to_u64(field("logIndex"), line, "logIndex");
    f.maker = field("maker");
    f.taker = field("taker");
    f.makerAssetId = field("makerAssetId");
    f.takerAssetId = field("takerAssetId");
    f.makerAmountFilled = to_amount(field("makerAmountFilled"), line, "makerAmountFilled");
    f.takerAmountFilled = to_amount(field("takerAmountFilled"), line, "takerAmountFilled");
    auto ts = j.find("timestamp");
    if (ts == j.end() || ts->is_null()) {
        if (!timestampOptional) throw ParseError(line, "missing key 'timestamp'");
        f.timestamp = -1;
    } else if (ts->is_string() && ts->get<std::string>().find('-') != std::string::npos) {
        try {
            f.timestamp = parse_utc(ts->get<std::string>());
        } catch (const std::exception& e) {
            throw ParseError(line, e.what());
        }
    } else {
        f.timestamp = static_cast<UnixSeconds>(to_u64(json_text(*ts, line, "timestamp"), line, "timestamp"));
    }
    return f;
}

FillEvent parse_csv(std::string_view record, std::size_t line, const CsvLayout& layout, bool timestampOptional) {
    auto cells = split_csv(record);
    if (cells.size() != layout.width())
        throw ParseError(line, "expected " + std::to_string(layout.width()) + " columns, got " + std::to_string(cells.size()));
    auto cell = [&](const char* name) -> std::string_view {
        auto idx = layout.column(name);
        if (!idx) throw ParseError(line, std::string("missing column '") + name + "'");
        return cells[*idx];
    };
    FillEvent f;
    f.block = to_u64(cell("block"), line, "block");
    f.txIndex = to_u64(cell("txIndex"), line, "txIndex");
    f.logIndex = to_u64(cell("logIndex"), line, "logIndex");
    f.maker = std::string(cell("maker"));
    f.taker = std::string(cell("taker"));
    f.makerAssetId = std::string(cell("makerAssetId"));
    f.takerAssetId = std::string(cell("takerAssetId"));
    f.makerAmountFilled = to_amount(cell("makerAmountFilled"), line, "makerAmountFilled");
    f.takerAmountFilled = to_amount(cell("takerAmountFilled"), line, "takerAmountFilled");
    const auto tsCol = layout.column("timestamp");
    if (!tsCol || cells[*tsCol].empty()) {
        if (!timestampOptional) throw ParseError(line, "missing timestamp");
        f.timestamp = -1;
    } else if (cells[*tsCol].find('-') != std::string_view::npos) {
        try {
            f.timestamp = parse_utc(cells[*tsCol]);
        } catch (const std::exception& e) {
            throw ParseError(line, e.what());
        }
    } else {
        f.timestamp = static_cast<UnixSeconds>(to_u64(cells[*tsCol], line, "timestamp"));
    }
    return f;
}

RecordFormat format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return RecordFormat::Csv;
    if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return RecordFormat::Jsonl;
    throw ConfigError("cannot infer record format from extension of " + path.string());
}

} // namespace

CsvLayout::CsvLayout() {
    for (std::size_t i = 0; i < std::size(kFillColumns); ++i) index_.emplace(kFillColumns[i], i);
    width_ = std::size(kFillColumns);
}

CsvLayout CsvLayout::from_header(std::string_view header) {
    CsvLayout layout;
    layout.index_.clear();
    auto cells = split_csv(header);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string name(cells[i]);
        if (std::find_if(std::begin(kFillColumns), std::end(kFillColumns), [&](const char* c) { return name == c; }) ==
            std::end(kFillColumns))
            throw ParseError(1, "unknown CSV column '" + name + "'");
        if (!layout.index_.emplace(name, i).second) throw ParseError(1, "duplicate CSV column '" + name + "'");
    }
    for (const char* required : kFillColumns) {
        if (std::string_view(required) == "timestamp") continue;
        if (!layout.index_.count(std::string_view(required)))
            throw ParseError(1, std::string("CSV header lacks column '") + required + "'");
    }
    layout.width_ = cells.size();
    return layout;
}

std::optional<std::size_t> CsvLayout::column(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

FillEvent parse_fill_record(std::string_view record, RecordFormat format, std::size_t lineNumber,
                            const CsvLayout& layout, bool timestampOptional) {
    FillEvent f = format == RecordFormat::Jsonl ? parse_jsonl(record, lineNumber, timestampOptional)
                                                : parse_csv(record, lineNumber, layout, timestampOptional);
    validate(f, lineNumber);
    return f;
}

std::string csv_header() {
    std::string out;
    for (std::size_t i = 0; i < std::size(kFillColumns); ++i) {
        if (i) out += ',';
        out += kFillColumns[i];
    }
    return out;
}

std::string serialize_fill(const FillEvent& f, RecordFormat format) {
    if (format == RecordFormat::Jsonl) {
        // Key order is fixed so serialized ledgers are byte-stable.
        std::ostringstream os;
        os << "{\"block\":" << f.block << ",\"txIndex\":" << f.txIndex << ",\"logIndex\":" << f.logIndex
           << ",\"maker\":" << json(f.maker).dump() << ",\"taker\":" << json(f.taker).dump()
           << ",\"makerAssetId\":" << json(f.makerAssetId).dump() << ",\"takerAssetId\":" << json(f.takerAssetId).dump()
           << ",\"makerAmountFilled\":\"" << f.makerAmountFilled << "\",\"takerAmountFilled\":\"" << f.takerAmountFilled
           << "\",\"timestamp\":" << f.timestamp << "}";
        return os.str();
    }
    std::ostringstream os;
    os << f.block << ',' << f.txIndex << ',' << f.logIndex << ',' << f.maker << ',' << f.taker << ',' << f.makerAssetId
       << ',' << f.takerAssetId << ',' << f.makerAmountFilled << ',' << f.takerAmountFilled << ',' << f.timestamp;
    return os.str();
}

std::map<std::uint64_t, UnixSeconds> read_block_times(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open block-time file " + path.string());
    std::map<std::uint64_t, UnixSeconds> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv(line);
        if (n == 1 && cells.size() >= 1 && cells[0] == "block") continue;
        if (cells.size() != 2) throw ParseError(n, "block-time rows must be 'block,timestamp'");
        const auto block = to_u64(cells[0], n, "block");
        UnixSeconds ts = 0;
        if (cells[1].find('-') != std::string_view::npos) {
            try {
                ts = parse_utc(cells[1]);
            } catch (const std::exception& e) {
                throw ParseError(n, e.what());
            }
        } else {
            ts = static_cast<UnixSeconds>(to_u64(cells[1], n, "timestamp"));
        }
        if (!out.emplace(block, ts).second) throw ParseError(n, "duplicate block " + std::to_string(block));
    }
    return out;
}

std::vector<FillEvent> read_fills(const std::filesystem::path& path,
                                  const std::map<std::uint64_t, UnixSeconds>* blockTimes) {
    const RecordFormat format = format_for(path);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input " + path.string());
    std::vector<FillEvent> out;
    std::string line;
    std::size_t n = 0;
    CsvLayout layout;
    bool headerSeen = format == RecordFormat::Jsonl;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        if (!headerSeen) {
            layout = CsvLayout::from_header(line);
            headerSeen = true;
            continue;
        }
        FillEvent f = parse_fill_record(line, format, n, layout, blockTimes != nullptr);
        if (blockTimes) {
            auto it = blockTimes->find(f.block);
            if (it != blockTimes->end()) {
                if (f.timestamp >= 0 && f.timestamp != it->second)
                    throw SchemaError("line " + std::to_string(n) + ": timestamp disagrees with block-time sidecar");
                f.timestamp = it->second;
            } else if (f.timestamp < 0) {
                throw SchemaError("line " + std::to_string(n) + ": no timestamp for block " + std::to_string(f.block));
            }
        }
        out.push_back(std::move(f));
    }
    if (!headerSeen) throw ParseError(1, "CSV file has no header: " + path.string());
    return out;
}

std::vector<FillEvent> read_fill_shards(const std::vector<std::filesystem::path>& paths,
                                        const std::map<std::uint64_t, UnixSeconds>* blockTimes, unsigned workers) {
    std::vector<std::vector<FillEvent>> shards(paths.size());
    workers = std::max(1u, workers);
    for (std::size_t begin = 0; begin < paths.size(); begin += workers) {
        std::vector<std::future<std::vector<FillEvent>>> batch;
        const std::size_t end = std::min(paths.size(), begin + workers);
        for (std::size_t i = begin; i < end; ++i)
            batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                       [&, i] { return read_fills(paths[i], blockTimes); }));
        for (std::size_t i = begin; i < end; ++i) {
            try {
                shards[i] = batch[i - begin].get();
            } catch (const ParseError& e) {
                throw DataError(paths[i].string() + ": " + e.what());
            }
        }
    }
    std::vector<FillEvent> merged;
    for (auto& s : shards) merged.insert(merged.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    std::stable_sort(merged.begin(), merged.end(), [](const FillEvent& a, const FillEvent& b) {
        return std::tie(a.block, a.txIndex, a.logIndex) < std::tie(b.block, b.txIndex, b.logIndex);
    });
    return merged;
}

std::vector<Transaction> group_transactions(std::vector<FillEvent> fills) {
    std::sort(fills.begin(), fills.end(), [](const FillEvent& a, const FillEvent& b) {
        return std::tie(a.block, a.txIndex, a.logIndex) < std::tie(b.block, b.txIndex, b.logIndex);
    });
    std::vector<Transaction> out;
    for (std::size_t i = 0; i < fills.size(); ++i) {
        FillEvent& f = fills[i];
        if (i > 0) {
            const FillEvent& prev = fills[i - 1];
            if (prev.block == f.block && prev.txIndex == f.txIndex && prev.logIndex == f.logIndex)
                throw DuplicateEventError("duplicate fill at (block " + std::to_string(f.block) + ", txIndex " +
                                          std::to_string(f.txIndex) + ", logIndex " + std::to_string(f.logIndex) + ")");
        }
        if (out.empty() || out.back().block != f.block || out.back().txIndex != f.txIndex) {
            Transaction tx;
            tx.block = f.block;
            tx.txIndex = f.txIndex;
            tx.timestamp = f.timestamp;
            out.push_back(std::move(tx));
        } else if (out.back().timestamp != f.timestamp) {
            throw SchemaError("fills of transaction (block " + std::to_string(f.block) + ", txIndex " +
                              std::to_string(f.txIndex) + ") carry different timestamps");
        }
        out.back().fills.push_back(std::move(f));
    }
    return out;
}

LedgerWindow make_window(const std::vector<Transaction>& txs, UnixSeconds start, UnixSeconds end) {
    if (start >= end) throw ConfigError("window start must precede end");
    LedgerWindow w;
    w.start = start;
    w.end = end;
    for (const auto& tx : txs)
        if (tx.timestamp >= start && tx.timestamp < end) w.transactions.push_back(tx);
    return w;
}

const MarketSpec* MarketConfig::find_market(std::string_view candidate) const {
    for (const auto& m : markets)
        if (m.candidate == candidate) return &m;
    return nullptr;
}

std::optional<std::pair<const MarketSpec*, Side>> MarketConfig::find_token(std::string_view tokenId) const {
    for (const auto& m : markets) {
        if (m.yesTokenId == tokenId) return std::make_pair(&m, Side::Yes);
        if (m.noTokenId == tokenId) return std::make_pair(&m, Side::No);
    }
    return std::nullopt;
}

MarketConfig parse_market_config(std::string_view jsonText) {
    json doc;
    try {
        doc = json::parse(jsonText);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("market config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("markets") || !doc["markets"].is_array())
        throw ConfigError("market config must be an object with a 'markets' array");
    MarketConfig cfg;
    std::map<std::string, std::string> owner;
    auto str = [](const json& m, const char* key, std::size_t i) -> std::string {
        if (!m.contains(key) || !m[key].is_string() || m[key].get<std::string>().empty())
            throw ConfigError("market #" + std::to_string(i) + " lacks string field '" + key + "'");
        return m[key].get<std::string>();
    };
    for (std::size_t i = 0; i < doc["markets"].size(); ++i) {
        const json& m = doc["markets"][i];
        if (!m.is_object()) throw ConfigError("market #" + std::to_string(i) + " is not an object");
        MarketSpec spec;
        spec.candidate = str(m, "candidate", i);
        spec.yesTokenId = str(m, "yesTokenId", i);
        spec.noTokenId = str(m, "noTokenId", i);
        if (!is_decimal_id(spec.yesTokenId) || !is_decimal_id(spec.noTokenId))
            throw ConfigError("market " + spec.candidate + ": token ids must be decimal strings");
        if (spec.yesTokenId == spec.noTokenId) throw ConfigError("market " + spec.candidate + ": yesTokenId equals noTokenId");
        if (spec.yesTokenId == kCollateralAssetId || spec.noTokenId == kCollateralAssetId)
            throw ConfigError("market " + spec.candidate + ": token id \"0\" is reserved for collateral");
        try {
            spec.launch = m.contains("launch") ? parse_utc(str(m, "launch", i)) : 0;
            if (m.contains("resolution") && !m["resolution"].is_null()) spec.resolution = parse_utc(str(m, "resolution", i));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("market " + spec.candidate + ": " + e.what());
        }
        if (cfg.find_market(spec.candidate)) throw ConfigError("duplicate market candidate '" + spec.candidate + "'");
        for (const auto* id : {&spec.yesTokenId, &spec.noTokenId}) {
            auto [it, fresh] = owner.emplace(*id, spec.candidate);
            if (!fresh)
                throw ConfigError("token id " + *id + " claimed by both '" + it->second + "' and '" + spec.candidate + "'");
        }
        cfg.markets.push_back(std::move(spec));
    }
    if (doc.contains("exchangeAddresses")) {
        if (!doc["exchangeAddresses"].is_array()) throw ConfigError("'exchangeAddresses' must be an array");
        for (const auto& a : doc["exchangeAddresses"]) {
            if (!a.is_string()) throw ConfigError("'exchangeAddresses' entries must be strings");
            cfg.exchangeAddresses.insert(a.get<std::string>());
        }
    }
    return cfg;
}

MarketConfig load_market_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open market config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_market_config(ss.str());
}

} // namespace pmflow
