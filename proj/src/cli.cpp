#include "pmflow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "pmflow/ctf.hpp"
#include "pmflow/decompose.hpp"
#include "pmflow/fetch.hpp"
#include "pmflow/ledger.hpp"
#include "pmflow/metrics.hpp"
#include "pmflow/microstructure.hpp"
#include "pmflow/prices.hpp"
#include "pmflow/synth.hpp"
#include "pmflow/traders.hpp"

namespace pmflow {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

namespace {

constexpr const char* kDefaultFrom = "2024-01-05T00:00:00Z";
constexpr const char* kDefaultTo = "2024-11-06T06:46:00Z";

class AnomaliesExceeded : public Error {
public:
    using Error::Error;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
    return s;
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

/// Plot-ready table rendered as CSV or as a JSON array of string-valued objects.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string render(const std::string& format) const {
        if (format == "json") {
            ordered_json arr = ordered_json::array();
            for (const auto& r : rows) {
                ordered_json o = ordered_json::object();
                for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
                arr.push_back(std::move(o));
            }
            return arr.dump(2) + "\n";
        }
        std::string s = join(header, ",") + "\n";
        for (const auto& r : rows) s += join(r, ",") + "\n";
        return s;
    }
};

/// Options shared by the analysis subcommands.
struct Common {
    std::vector<std::string> inputs;
    std::string blockTimes;
    std::string markets;
    std::string from;
    std::string to;
    std::string out;
    std::string format = "csv";
    std::vector<std::string> exclude;
    unsigned workers = 1;
};

/// Everything a run produces, written in one pass once the computation has succeeded.
struct RunOutputs {
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<fs::path> inputs;

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void add_table(const std::string& stem, const Table& t, const std::string& format) {
        add(stem + (format == "json" ? ".json" : ".csv"), t.render(format));
    }
};

void require_exists(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("missing ") + what);
    if (!fs::exists(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

UnixSeconds parse_time_flag(const std::string& text, const char* flag) {
    try {
        return parse_utc(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string(flag) + ": " + e.what());
    }
}

struct Window {
    UnixSeconds from = 0;
    UnixSeconds to = 0;
};

Window resolve_window(const Common& c, bool defaults) {
    Window w;
    w.from = c.from.empty() ? (defaults ? parse_utc(kDefaultFrom) : std::numeric_limits<UnixSeconds>::min())
                            : parse_time_flag(c.from, "--from");
    w.to = c.to.empty() ? (defaults ? parse_utc(kDefaultTo) : std::numeric_limits<UnixSeconds>::max())
                        : parse_time_flag(c.to, "--to");
    if (w.from >= w.to) throw ConfigError("--from must be earlier than --to");
    return w;
}

void add_common(CLI::App* sub, Common& c, bool needsInput, bool needsMarkets) {
    auto* in = sub->add_option("--input", c.inputs, "Fill files (.jsonl or .csv); repeatable");
    if (needsInput) in->required();
    sub->add_option("--block-times", c.blockTimes, "Block timestamp sidecar CSV (block,timestamp)");
    auto* m = sub->add_option("--markets", c.markets, "Market config JSON");
    if (needsMarkets) m->required();
    sub->add_option("--from", c.from, "Window start, ISO-8601 UTC (inclusive)");
    sub->add_option("--to", c.to, "Window end, ISO-8601 UTC (exclusive)");
    sub->add_option("--out", c.out, "Output directory")->required();
    sub->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--exclude-addresses", c.exclude, "Addresses left out of trader counts")->delimiter(',');
    sub->add_option("--workers", c.workers, "Parallel readers for input shards")->check(CLI::PositiveNumber);
}

MarketConfig load_markets(const Common& c, RunOutputs& o) {
    require_exists(c.markets, "market config");
    o.inputs.emplace_back(c.markets);
    return load_market_config(c.markets);
}

std::vector<Transaction> load_ledger(const Common& c, RunOutputs& o) {
    std::vector<fs::path> paths;
    for (const auto& p : c.inputs) {
        require_exists(p, "input");
        paths.emplace_back(p);
        o.inputs.emplace_back(p);
    }
    std::optional<std::map<std::uint64_t, UnixSeconds>> times;
    if (!c.blockTimes.empty()) {
        require_exists(c.blockTimes, "block-time sidecar");
        o.inputs.emplace_back(c.blockTimes);
        times = read_block_times(c.blockTimes);
    }
    return group_transactions(read_fill_shards(paths, times ? &*times : nullptr, c.workers));
}

std::vector<Transaction> in_window(const std::vector<Transaction>& txs, const Window& w) {
    std::vector<Transaction> out;
    for (const auto& tx : txs)
        if (tx.timestamp >= w.from && tx.timestamp < w.to) out.push_back(tx);
    return out;
}

const MarketSpec& lookup_market(const MarketConfig& cfg, const std::string& name) {
    const MarketSpec* m = cfg.find_market(name);
    if (!m) throw ConfigError("market '" + name + "' is not in the market config");
    return *m;
}

Side parse_side(const std::string& s) {
    if (s == "YES" || s == "yes") return Side::Yes;
    if (s == "NO" || s == "no") return Side::No;
    throw ConfigError("side must be YES or NO");
}

std::set<std::string> exclusions(const MarketConfig& cfg, const Common& c) {
    std::set<std::string> s = cfg.exchangeAddresses;
    s.insert(c.exclude.begin(), c.exclude.end());
    return s;
}

/// Option values without the path-valued ones; inputs are identified by digest instead, so the
/// manifest does not depend on where the run happened.
std::string portable_config(const CLI::App* sub) {
    static const std::set<std::string> pathKeys{"input", "markets", "block-times", "decomposed", "truth",
                                                "scenario", "checkpoint", "out"};
    std::stringstream in(sub->config_to_str(true, false));
    std::string kept;
    for (std::string line; std::getline(in, line);) {
        const std::string key = line.substr(0, line.find('='));
        if (pathKeys.count(key)) continue;
        kept += line + "\n";
    }
    return kept;
}

void write_outputs(const fs::path& dir, const RunOutputs& o, const std::string& subcommand, const std::string& config) {
    json manifest;
    manifest["tool"] = "pmflow";
    manifest["version"] = kVersion;
    manifest["subcommand"] = subcommand;
    manifest["config"] = config;
    manifest["configHash"] = sha256_hex(config);
    manifest["inputs"] = json::array();
    for (const auto& p : o.inputs)
        manifest["inputs"].push_back({{"name", p.filename().string()}, {"sha256", sha256_hex(read_file(p))}});
    manifest["outputs"] = json::array();
    for (const auto& [name, content] : o.files) manifest["outputs"].push_back({{"name", name}, {"sha256", sha256_hex(content)}});

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        f << content;
        if (!f) throw Error("failed writing " + (dir / name).string());
    };
    for (const auto& [name, content] : o.files) put(name, content);
    put("manifest.json", manifest.dump(2) + "\n");
}

// ---- ingest ------------------------------------------------------------------------------

struct IngestArgs {
    Common c;
    std::string rpc;
    std::uint64_t fromBlock = 0;
    std::uint64_t toBlock = 0;
    std::uint64_t pageSize = 1000;
    std::string checkpoint;
    std::string method = "pm_getOrderFilled";
};

void cmd_ingest(const IngestArgs& a, RunOutputs& o, std::ostream& out) {
    const Window w = resolve_window(a.c, false);
    std::vector<FillEvent> fills;
    if (!a.rpc.empty()) {
        if (!a.c.inputs.empty()) throw ConfigError("--rpc and --input are mutually exclusive");
        if (a.toBlock < a.fromBlock) throw ConfigError("--to-block must not precede --from-block");
        std::optional<std::map<std::uint64_t, UnixSeconds>> times;
        if (!a.c.blockTimes.empty()) {
            require_exists(a.c.blockTimes, "block-time sidecar");
            o.inputs.emplace_back(a.c.blockTimes);
            times = read_block_times(a.c.blockTimes);
        }
        FetchOptions opts;
        opts.pageSize = a.pageSize;
        opts.method = a.method;
        if (!a.checkpoint.empty()) opts.checkpointPath = a.checkpoint;
        const FetchResult r = fetch_event_logs(make_http_transport(a.rpc), {a.fromBlock, a.toBlock}, opts);
        std::size_t n = 0;
        for (const auto& rec : r.records) {
            FillEvent f = parse_fill_record(rec.dump(), RecordFormat::Jsonl, ++n, CsvLayout{}, times.has_value());
            if (times) {
                auto it = times->find(f.block);
                if (f.timestamp < 0) {
                    if (it == times->end()) throw DataError("no timestamp for block " + std::to_string(f.block));
                    f.timestamp = it->second;
                }
            }
            fills.push_back(std::move(f));
        }
        out << "fetched " << r.records.size() << " records in " << r.requests << " requests\n";
    } else {
        if (a.c.inputs.empty()) throw ConfigError("ingest needs --input files or --rpc");
        for (const auto& tx : load_ledger(a.c, o)) fills.insert(fills.end(), tx.fills.begin(), tx.fills.end());
    }
    std::optional<MarketConfig> cfg;
    if (!a.c.markets.empty()) cfg = load_markets(a.c, o);
    std::vector<FillEvent> kept;
    for (auto& f : fills) {
        if (f.timestamp < w.from || f.timestamp >= w.to) continue;
        if (cfg && !cfg->find_token(f.token_id())) continue;
        kept.push_back(std::move(f));
    }
    const auto txs = group_transactions(kept);
    const RecordFormat fmt = a.c.format == "json" ? RecordFormat::Jsonl : RecordFormat::Csv;
    std::string body = fmt == RecordFormat::Csv ? csv_header() + "\n" : "";
    std::size_t count = 0;
    for (const auto& tx : txs)
        for (const auto& f : tx.fills) {
            body += serialize_fill(f, fmt) + "\n";
            ++count;
        }
    o.add(fmt == RecordFormat::Csv ? "fills.csv" : "fills.jsonl", body);
    json summary = {{"fills", count}, {"transactions", txs.size()}};
    o.add("ingest_summary.json", summary.dump(2) + "\n");
    out << "ingested " << count << " fills in " << txs.size() << " transactions\n";
}

// ---- decompose ---------------------------------------------------------------------------

struct DecomposeArgs {
    Common c;
    std::string truth;
    long long maxAnomalies = -1;
};

Table decomposed_table(const std::vector<DecomposedTx>& rows) {
    Table t;
    std::stringstream hs(decomposed_csv_header());
    for (std::string h; std::getline(hs, h, ',');) t.header.push_back(h);
    for (const auto& r : rows) {
        std::vector<std::string> cells;
        std::stringstream rs(to_csv_row(r));
        for (std::string v; std::getline(rs, v, ',');) cells.push_back(v);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void cmd_decompose(const DecomposeArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.c, o);
    const Window w = resolve_window(a.c, false);
    if (!a.truth.empty()) require_exists(a.truth, "ground-truth file");
    const auto txs = in_window(load_ledger(a.c, o), w);
    const LedgerDecomposition d = decompose_ledger(txs, cfg.markets);

    if (a.c.format == "json") o.add_table("decomposed", decomposed_table(d.rows), "json");
    else {
        std::string body = decomposed_csv_header() + "\n";
        for (const auto& r : d.rows) body += to_csv_row(r) + "\n";
        o.add("decomposed.csv", body);
    }
    std::string q;
    for (const auto& x : d.quarantined) {
        ordered_json j = {{"block", x.block}, {"txIndex", x.txIndex}, {"timestamp", x.timestamp},
                          {"market", x.market}, {"reason", x.reason}};
        q += j.dump() + "\n";
    }
    o.add("quarantine.jsonl", q);

    ordered_json summary = {{"transactions", txs.size()},
                            {"units", d.units},
                            {"decomposed", d.rows.size()},
                            {"quarantined", d.quarantined.size()},
                            {"tieBreaks", d.tieBreaks}};
    for (const auto& r : d.rows)
        if (r.tieBreak) out << "tie-break: block " << r.block << " txIndex " << r.txIndex << " market " << r.market << "\n";

    if (!a.truth.empty()) {
        o.inputs.emplace_back(a.truth);
        std::map<std::tuple<std::uint64_t, std::uint64_t, std::string>, GroundTruthTx> truth;
        std::ifstream in(a.truth);
        std::size_t lineNo = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineNo;
            if (line.empty()) continue;
            try {
                GroundTruthTx t = ground_truth_from_json(json::parse(line));
                truth.emplace(std::make_tuple(t.block, t.txIndex, t.market), std::move(t));
            } catch (const std::exception& e) {
                throw ParseError(lineNo, std::string("bad ground-truth record: ") + e.what());
            }
        }
        std::size_t matched = 0, mismatched = 0, missing = 0;
        std::string report = "block,txIndex,market,issue\n";
        for (const auto& r : d.rows) {
            auto it = truth.find({r.block, r.txIndex, r.market});
            if (it == truth.end()) {
                ++missing;
                report += std::to_string(r.block) + "," + std::to_string(r.txIndex) + "," + r.market + ",no ground truth\n";
            } else if (it->second.kind != r.kind || !(it->second.components == r.components)) {
                ++mismatched;
                report += std::to_string(r.block) + "," + std::to_string(r.txIndex) + "," + r.market + ",components differ\n";
            } else {
                ++matched;
            }
        }
        const std::size_t unseen = truth.size() - matched - mismatched;
        summary["truth"] = {{"labels", truth.size()}, {"matched", matched}, {"mismatched", mismatched},
                            {"unlabeled", missing}, {"undecomposedLabels", unseen}};
        o.add("truth_comparison.csv", report);
        out << "ground truth: " << matched << " matched, " << mismatched << " mismatched, " << missing << " unlabeled, "
            << unseen << " labels not decomposed\n";
    }
    o.add("decompose_summary.json", summary.dump(2) + "\n");
    out << "units " << d.units << ", decomposed " << d.rows.size() << ", quarantined " << d.quarantined.size()
        << ", tie-breaks " << d.tieBreaks << "\n";
    if (a.maxAnomalies >= 0 && d.quarantined.size() > static_cast<std::size_t>(a.maxAnomalies))
        throw AnomaliesExceeded(std::to_string(d.quarantined.size()) + " quarantined transactions exceed --max-anomalies " +
                                std::to_string(a.maxAnomalies));
}

// ---- shared decomposed-ledger loader -----------------------------------------------------

struct RowsArgs {
    Common c;
    std::string decomposed;
};

void add_rows_source(CLI::App* sub, RowsArgs& a) {
    add_common(sub, a.c, false, true);
    sub->add_option("--decomposed", a.decomposed, "Decomposed ledger CSV from the decompose subcommand");
}

std::vector<DecomposedTx> load_rows(const RowsArgs& a, const MarketConfig& cfg, RunOutputs& o) {
    if (!a.decomposed.empty() && !a.c.inputs.empty()) throw ConfigError("--decomposed and --input are mutually exclusive");
    if (!a.decomposed.empty()) {
        require_exists(a.decomposed, "decomposed ledger");
        o.inputs.emplace_back(a.decomposed);
        return read_decomposed_csv(a.decomposed);
    }
    if (a.c.inputs.empty()) throw ConfigError("need --input fills or --decomposed ledger");
    return decompose_ledger(load_ledger(a.c, o), cfg.markets).rows;
}

// ---- metrics -----------------------------------------------------------------------------

struct MetricsArgs {
    RowsArgs r;
    std::string partition = "month";
    std::vector<std::string> markets;
};

void cmd_metrics(const MetricsArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.r.c, o);
    const Partition part = partition_from_string(a.partition);
    const Window w = resolve_window(a.r.c, true);
    std::vector<std::string> names = a.markets;
    if (names.empty())
        for (const auto& m : cfg.markets) names.push_back(m.candidate);
    for (const auto& n : names) lookup_market(cfg, n);
    const auto rows = load_rows(a.r, cfg, o);

    Table longT{{"market", "side", "interval_start", "interval_end", "trade", "mint", "burn", "exchange_equivalent_volume",
                 "net_inflow", "gross_activity", "transactions"},
                {}};
    Table wide{{"interval_start", "interval_end"}, {}};
    for (const auto& n : names) {
        wide.header.push_back(n + "_VE");
        wide.header.push_back(n + "_F");
    }
    std::map<UnixSeconds, std::vector<std::string>> wideRows;
    for (std::size_t mi = 0; mi < names.size(); ++mi) {
        const auto totals = aggregate_components(rows, part, names[mi], DenseRange{w.from, w.to});
        for (const auto& t : totals) {
            const MarketMeasures mm = market_measures(t);
            SideTotals both = t.yes;
            both += t.no;
            auto emit = [&](const char* side, const SideTotals& s, const SideMeasures& m) {
                longT.rows.push_back({names[mi], side, format_utc(t.start), format_utc(t.end), format_micro(s.trade),
                                      format_micro(s.mint), format_micro(s.burn), format_micro(m.vE), format_micro(m.f),
                                      format_micro(m.vG), std::to_string(t.transactions)});
            };
            emit("YES", t.yes, mm.yes);
            emit("NO", t.no, mm.no);
            emit("combined", both, mm.combined);
            auto& wr = wideRows[t.start];
            if (wr.empty()) {
                wr.assign(2 + 2 * names.size(), format_micro(0));
                wr[0] = format_utc(t.start);
                wr[1] = format_utc(t.end);
            }
            wr[2 + 2 * mi] = format_micro(mm.combined.vE);
            wr[3 + 2 * mi] = format_micro(mm.combined.f);
        }
    }
    for (auto& [_, r] : wideRows) wide.rows.push_back(std::move(r));
    o.add_table("metrics", longT, a.r.c.format);
    o.add_table("metrics_table", wide, a.r.c.format);
    out << "partition " << to_string(part) << ", " << wide.rows.size() << " intervals, " << names.size() << " markets\n";
}

// ---- deviation ---------------------------------------------------------------------------

struct DeviationArgs {
    Common c;
    std::string market;
    UnixSeconds gridSeconds = 3600;
    std::optional<UnixSeconds> maxStaleness;
};

void cmd_deviation(const DeviationArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.c, o);
    const MarketSpec& m = lookup_market(cfg, a.market);
    if (a.gridSeconds <= 0) throw ConfigError("--grid-seconds must be positive");
    const Window w = resolve_window(a.c, true);
    const auto txs = in_window(load_ledger(a.c, o), w);
    const PriceSeries yes = build_price_series(txs, m.yesTokenId, cfg.exchangeAddresses);
    const PriceSeries no = build_price_series(txs, m.noTokenId, cfg.exchangeAddresses);
    Table t{{"timestamp", "delta", "yes_staleness_seconds", "no_staleness_seconds"}, {}};
    std::size_t dropped = 0;
    if (!yes.points.empty() && !no.points.empty()) {
        for (const auto& p : arbitrage_deviation(yes.points, no.points, a.gridSeconds)) {
            if (a.maxStaleness && (p.yesStaleness > *a.maxStaleness || p.noStaleness > *a.maxStaleness)) {
                ++dropped;
                continue;
            }
            t.rows.push_back({format_utc(p.timestamp), format_double(p.delta), std::to_string(p.yesStaleness),
                              std::to_string(p.noStaleness)});
        }
    }
    o.add_table("deviation", t, a.c.format);
    ordered_json s = {{"market", m.candidate},
                      {"gridSeconds", a.gridSeconds},
                      {"yesPrices", yes.points.size()},
                      {"noPrices", no.points.size()},
                      {"skippedZeroShares", yes.skippedZeroShares + no.skippedZeroShares},
                      {"rejectedOutOfRange", yes.rejectedOutOfRange + no.rejectedOutOfRange},
                      {"droppedStale", dropped},
                      {"points", t.rows.size()}};
    o.add("deviation_summary.json", s.dump(2) + "\n");
    if (yes.skippedZeroShares + no.skippedZeroShares)
        out << "warning: skipped " << yes.skippedZeroShares + no.skippedZeroShares << " transactions with zero shares\n";
    out << t.rows.size() << " deviation points\n";
}

// ---- disagreement ------------------------------------------------------------------------

struct DisagreementArgs {
    RowsArgs r;
    std::string rival = "Trump";
    std::string before = "Biden";
    std::string after = "Harris";
    std::string side = "YES";
    std::string spliceDay = "2024-07-21";
    std::size_t windowDays = 90;
    std::size_t stepDays = 1;
};

void cmd_disagreement(const DisagreementArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.r.c, o);
    for (const auto* n : {&a.rival, &a.before, &a.after}) lookup_market(cfg, *n);
    const Side side = parse_side(a.side);
    const UnixSeconds splice = floor_day(parse_time_flag(a.spliceDay, "--splice-day"));
    if (a.windowDays < 2) throw ConfigError("--corr-window-days must be at least 2");
    if (a.stepDays < 1) throw ConfigError("--step-days must be positive");
    const Window w = resolve_window(a.r.c, true);
    const auto rows = load_rows(a.r, cfg, o);
    const UnixSeconds from = floor_day(w.from);
    const auto rival = daily_net_inflow(rows, a.rival, side, from, w.to);
    const auto before = daily_net_inflow(rows, a.before, side, from, w.to);
    const auto after = daily_net_inflow(rows, a.after, side, from, w.to);
    const auto dem = splice_inflow_series(before, after, splice);

    Table inflow{{"day", a.rival, "democrat", a.before, a.after}, {}};
    for (std::size_t i = 0; i < rival.size(); ++i)
        inflow.rows.push_back({format_utc_date(rival[i].day), format_micro(rival[i].netInflow), format_micro(dem[i].netInflow),
                               format_micro(before[i].netInflow), format_micro(after[i].netInflow)});
    Table corr{{"day", "correlation"}, {}};
    std::size_t nulls = 0;
    if (rival.size() >= a.windowDays) {
        for (const auto& p : rolling_correlation(rival, dem, a.windowDays, a.stepDays)) {
            if (!p.value) ++nulls;
            corr.rows.push_back({format_utc_date(p.day), opt_double(p.value)});
        }
    }
    o.add_table("inflow", inflow, a.r.c.format);
    o.add_table("correlation", corr, a.r.c.format);
    out << inflow.rows.size() << " days, " << corr.rows.size() << " correlation points (" << nulls
        << " zero-variance windows), splice at " << format_utc_date(splice) << "\n";
}

// ---- lambda ------------------------------------------------------------------------------

struct LambdaArgs {
    Common c;
    std::string market;
    std::string side = "YES";
    std::size_t windowHours = 720;
    std::size_t stepHours = 24;
    std::string weight = "shares";
    double clampEps = kDefaultClampEpsilon;
    std::size_t volumeWindowDays = 30;
    bool noIntercept = false;
};

ordered_json regression_json(const RegressionResult& r) {
    ordered_json j;
    j["slope"] = format_double(r.slope);
    j["intercept"] = r.intercept ? json(format_double(*r.intercept)) : json(nullptr);
    j["slopeT"] = format_double(r.slopeT);
    j["interceptT"] = r.interceptT ? json(format_double(*r.interceptT)) : json(nullptr);
    j["r2"] = format_double(r.r2);
    j["adjustedR2"] = format_double(r.adjustedR2);
    j["n"] = std::to_string(r.n);
    return j;
}

void cmd_lambda(const LambdaArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.c, o);
    const MarketSpec& m = lookup_market(cfg, a.market);
    const Side side = parse_side(a.side);
    if (a.windowHours < 2) throw ConfigError("--window-hours must be at least 2");
    if (a.stepHours < 1) throw ConfigError("--step-hours must be positive");
    if (!(a.clampEps > 0 && a.clampEps < 0.5)) throw ConfigError("--clamp-eps must lie in (0, 0.5)");
    if (a.volumeWindowDays < 1) throw ConfigError("--volume-window-days must be positive");
    const VwapWeight weight = a.weight == "notional" ? VwapWeight::Notional : VwapWeight::Shares;
    const Window w = resolve_window(a.c, true);
    const auto txs = in_window(load_ledger(a.c, o), w);

    const PriceSeries prices = build_price_series(txs, m.token(side), cfg.exchangeAddresses);
    const auto trades = sign_trades(prices.points);
    std::vector<HourBar> bars;
    if (!trades.empty()) bars = hourly_bars(trades, weight);
    std::size_t clamped = 0;
    const auto inc = bars.empty() ? std::vector<BarIncrement>{} : log_odds_increments(bars, a.clampEps, &clamped);
    const auto lambdas =
        rolling_kyle_lambda(inc, {a.windowHours, static_cast<UnixSeconds>(a.stepHours) * kSecondsPerHour});

    const auto rows = decompose_ledger(txs, {m}).rows;
    std::vector<DatedValue> daily;
    for (const auto& t : aggregate_components(rows, Partition::Day, m.candidate, DenseRange{floor_day(w.from), w.to}))
        daily.push_back({t.start, static_cast<double>(exchange_equivalent_volume(t.side(side))) / 1e12});
    std::map<UnixSeconds, double> avgByDay;
    for (const auto& v : rolling_avg_volume(daily, a.volumeWindowDays)) avgByDay[v.date] = v.value;

    Table t{{"date", "lambda", "se", "n", "avg_volume"}, {}};
    std::vector<DatedValue> volumes;
    for (const auto& e : lambdas) {
        auto it = avgByDay.find(floor_day(e.date) - kSecondsPerDay);
        std::string avg;
        if (it != avgByDay.end()) {
            avg = format_double(it->second);
            volumes.push_back({e.date, it->second});
        }
        t.rows.push_back({format_utc(e.date), opt_double(e.lambda), opt_double(e.standardError),
                          std::to_string(e.observations), avg});
    }
    o.add_table("lambda", t, a.c.format);

    ordered_json reg;
    reg["withIntercept"] = !a.noIntercept;
    try {
        reg["result"] = regression_json(lambda_volume_regression(lambdas, volumes, !a.noIntercept));
    } catch (const RegressionError& e) {
        reg["result"] = nullptr;
        reg["error"] = e.what();
    }
    o.add("regression.json", reg.dump(2) + "\n");

    std::size_t directed = 0;
    for (const auto& s : trades) directed += s.direction != 0;
    ordered_json s = {{"market", m.candidate},         {"side", to_string(side)},
                      {"token", m.token(side)},        {"trades", trades.size()},
                      {"directedTrades", directed},    {"bars", bars.size()},
                      {"clampedBars", clamped},        {"estimates", lambdas.size()},
                      {"weight", a.weight},            {"windowHours", a.windowHours},
                      {"volumeWindowDays", a.volumeWindowDays}};
    o.add("lambda_summary.json", s.dump(2) + "\n");
    out << lambdas.size() << " lambda estimates from " << bars.size() << " hourly bars\n";
}

// ---- impact ------------------------------------------------------------------------------

struct ImpactArgs {
    std::vector<double> lambdas;
    std::vector<double> prices{0.5};
    std::vector<double> flows{1.0};
    std::string out;
    std::string format = "csv";
};

Table impact_table(const ImpactArgs& a) {
    Table t{{"lambda", "p", "q", "delta_theta", "delta_p_taylor", "delta_p_exact"}, {}};
    for (double l : a.lambdas)
        for (double p : a.prices)
            for (double q : a.flows) {
                if (!(p > 0 && p < 1)) throw ConfigError("--p must lie in (0, 1)");
                const double dTheta = l * q;
                const double exact = inverse_log_odds(log_odds(p, 0.0).theta + dTheta) - p;
                t.rows.push_back({format_double(l), format_double(p), format_double(q), format_double(dTheta),
                                  format_double(price_impact_delta_p(l, p, q)), format_double(exact)});
            }
    return t;
}

// ---- traders -----------------------------------------------------------------------------

struct TradersArgs {
    Common c;
    std::string quarter;
    std::string mode = "distinct";
    std::vector<std::string> markets;
};

std::pair<int, int> parse_quarter(const std::string& q) {
    if (q.size() != 6 || (q[4] != 'Q' && q[4] != 'q') || q[5] < '1' || q[5] > '4' ||
        !std::all_of(q.begin(), q.begin() + 4, [](char ch) { return ch >= '0' && ch <= '9'; }))
        throw ConfigError("--quarter must look like 2024Q3");
    return {std::stoi(q.substr(0, 4)), q[5] - '0'};
}

void cmd_traders(const TradersArgs& a, RunOutputs& o, std::ostream& out) {
    const MarketConfig cfg = load_markets(a.c, o);
    std::vector<MarketSpec> selected;
    if (a.markets.empty()) selected = cfg.markets;
    for (const auto& n : a.markets) selected.push_back(lookup_market(cfg, n));
    const auto tokens = token_markets(selected);
    const HourlyCountMode mode = a.mode == "per-market" ? HourlyCountMode::PerMarket : HourlyCountMode::Distinct;
    Window w = resolve_window(a.c, true);
    if (!a.quarter.empty()) {
        const auto [year, q] = parse_quarter(a.quarter);
        std::tie(w.from, w.to) = quarter_window(year, q, w.from, w.to);
    }
    const std::set<std::string> excluded = exclusions(cfg, a.c);
    const auto txs = in_window(load_ledger(a.c, o), w);

    const auto all = hourly_active_traders(txs, tokens, w.from, w.to, excluded, mode);
    std::optional<std::vector<std::string>> topFreq, topVol;
    std::string note;
    try {
        topFreq = top_decile_traders(txs, tokens, TraderRanking::Frequency, w.from, w.to, excluded);
        topVol = top_decile_traders(txs, tokens, TraderRanking::Volume, w.from, w.to, excluded);
    } catch (const DataError& e) {
        note = e.what();
        out << "warning: " << note << "\n";
    }
    Table hourly{{"hour", "all_traders", "top_frequency", "top_volume"}, {}};
    std::array<double, 24> freqH{}, volH{};
    if (topFreq) {
        freqH = hourly_active_traders(txs, tokens, w.from, w.to, excluded, mode, {topFreq->begin(), topFreq->end()});
        volH = hourly_active_traders(txs, tokens, w.from, w.to, excluded, mode, {topVol->begin(), topVol->end()});
    }
    for (std::size_t h = 0; h < 24; ++h)
        hourly.rows.push_back({std::to_string(h), format_double(all[h]), topFreq ? format_double(freqH[h]) : "",
                               topVol ? format_double(volH[h]) : ""});
    o.add_table("hourly", hourly, a.c.format);

    auto ranked = [](const std::optional<std::vector<std::string>>& v) {
        Table t{{"rank", "address"}, {}};
        if (v)
            for (std::size_t i = 0; i < v->size(); ++i) t.rows.push_back({std::to_string(i + 1), (*v)[i]});
        return t;
    };
    o.add_table("top_frequency", ranked(topFreq), a.c.format);
    o.add_table("top_volume", ranked(topVol), a.c.format);

    const ParticipationReport p = participation_sets(txs, tokens, excluded);
    auto cellTable = [](const std::vector<ParticipationCell>& cells, const std::vector<std::string>& labels) {
        Table t{{"mask", "markets", "traders", "share_pct"}, {}};
        for (const auto& c : cells) {
            std::vector<std::string> names;
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (c.mask >> i & 1u) names.push_back(labels[i]);
            t.rows.push_back({std::to_string(c.mask), join(names, "+"), std::to_string(c.traders), format_double(c.sharePct)});
        }
        return t;
    };
    o.add_table("participation", cellTable(p.cells, p.labels), a.c.format);
    o.add_table("participation_candidates", cellTable(p.candidateCells, p.candidateLabels), a.c.format);
    Table marg{{"market", "traders", "share_pct"}, {}};
    for (std::size_t i = 0; i < p.labels.size(); ++i)
        marg.rows.push_back({p.labels[i], std::to_string(p.marginalCounts[i]), format_double(p.marginalPct[i])});
    o.add_table("participation_marginals", marg, a.c.format);
    ordered_json s = {{"from", format_utc(w.from)}, {"to", format_utc(w.to)}, {"mode", a.mode},
                      {"traders", p.totalTraders}, {"excludedAddresses", excluded.size()}};
    if (!note.empty()) s["topDecile"] = note;
    o.add("traders_summary.json", s.dump(2) + "\n");
    out << p.totalTraders << " active traders between " << format_utc(w.from) << " and " << format_utc(w.to) << "\n";
}

// ---- simulate ----------------------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> transactions;
    std::string out;
    std::string format = "json";
};

json market_config_json(const SyntheticScenario& sc) {
    json doc;
    doc["markets"] = json::array();
    for (const auto& m : sc.markets) {
        json j = {{"candidate", m.candidate}, {"yesTokenId", m.yesTokenId}, {"noTokenId", m.noTokenId},
                  {"launch", format_utc(m.launch)}};
        if (m.resolution) j["resolution"] = format_utc(*m.resolution);
        doc["markets"].push_back(j);
    }
    doc["exchangeAddresses"] = json::array({sc.exchangeAddress});
    return doc;
}

void cmd_simulate(const SimulateArgs& a, RunOutputs& o, std::ostream& out) {
    require_exists(a.scenario, "scenario");
    o.inputs.emplace_back(a.scenario);
    SyntheticScenario sc = load_scenario(a.scenario);
    if (a.seed) sc.seed = *a.seed;
    if (a.transactions) sc.transactions = *a.transactions;
    if (sc.markets.empty()) throw ConfigError("scenario lists no markets");
    const SyntheticLedger led = generate_synthetic_ledger(sc);
    const RecordFormat fmt = a.format == "csv" ? RecordFormat::Csv : RecordFormat::Jsonl;
    std::string fills = fmt == RecordFormat::Csv ? csv_header() + "\n" : "";
    for (const auto& f : led.fills) fills += serialize_fill(f, fmt) + "\n";
    o.add(fmt == RecordFormat::Csv ? "fills.csv" : "fills.jsonl", fills);
    std::string truth;
    for (const auto& t : led.truth) truth += to_jsonl_line(t) + "\n";
    o.add("ground_truth.jsonl", truth);
    std::string arb;
    for (const auto& e : led.arbitrage) arb += to_json(e).dump() + "\n";
    o.add("arbitrage.jsonl", arb);
    o.add("markets.json", market_config_json(sc).dump(2) + "\n");
    out << "simulated " << led.truth.size() << " transactions (" << led.fills.size() << " fills, " << led.arbitrage.size()
        << " arbitrage rounds), seed " << sc.seed << "\n";
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pmflow: prediction-market fill-log analytics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();

    IngestArgs ingest;
    auto* sIngest = app.add_subcommand("ingest", "Normalize fill files or fetch them over JSON-RPC");
    add_common(sIngest, ingest.c, false, false);
    sIngest->add_option("--rpc", ingest.rpc, "JSON-RPC endpoint URL");
    sIngest->add_option("--from-block", ingest.fromBlock, "First block (inclusive)");
    sIngest->add_option("--to-block", ingest.toBlock, "End block (exclusive)");
    sIngest->add_option("--page-size", ingest.pageSize, "Blocks per request")->check(CLI::PositiveNumber);
    sIngest->add_option("--checkpoint", ingest.checkpoint, "Checkpoint file for resumable fetches");
    sIngest->add_option("--rpc-method", ingest.method, "JSON-RPC method name");

    DecomposeArgs decompose;
    auto* sDecompose = app.add_subcommand("decompose", "Split transactions into trade/mint/burn components");
    add_common(sDecompose, decompose.c, true, true);
    sDecompose->add_option("--truth", decompose.truth, "Ground-truth sidecar to compare against");
    sDecompose->add_option("--max-anomalies", decompose.maxAnomalies, "Quarantine count above which the run fails");

    MetricsArgs metrics;
    auto* sMetrics = app.add_subcommand("metrics", "Exchange-equivalent volume, net inflow and gross activity");
    add_rows_source(sMetrics, metrics.r);
    sMetrics->add_option("--partition", metrics.partition)->check(CLI::IsMember({"hour", "day", "month"}));
    sMetrics->add_option("--market", metrics.markets, "Restrict to these markets; repeatable");

    DeviationArgs deviation;
    auto* sDeviation = app.add_subcommand("deviation", "YES + NO price deviation from 1");
    add_common(sDeviation, deviation.c, true, true);
    sDeviation->add_option("--market", deviation.market)->required();
    sDeviation->add_option("--grid-seconds", deviation.gridSeconds, "Sampling grid step");
    sDeviation->add_option("--max-staleness-seconds", deviation.maxStaleness, "Drop points with an older leg");

    DisagreementArgs dis;
    auto* sDis = app.add_subcommand("disagreement", "Rolling correlation of daily net inflows");
    add_rows_source(sDis, dis.r);
    sDis->add_option("--rival", dis.rival);
    sDis->add_option("--before", dis.before, "Market used before the splice day");
    sDis->add_option("--after", dis.after, "Market used from the splice day on");
    sDis->add_option("--side", dis.side)->check(CLI::IsMember({"YES", "NO"}));
    sDis->add_option("--splice-day", dis.spliceDay);
    sDis->add_option("--corr-window-days", dis.windowDays);
    sDis->add_option("--step-days", dis.stepDays);

    LambdaArgs lambda;
    auto* sLambda = app.add_subcommand("lambda", "Rolling Kyle's lambda and its regression on volume");
    add_common(sLambda, lambda.c, true, true);
    sLambda->add_option("--market", lambda.market)->required();
    sLambda->add_option("--side", lambda.side)->check(CLI::IsMember({"YES", "NO"}));
    sLambda->add_option("--window-hours", lambda.windowHours);
    sLambda->add_option("--step-hours", lambda.stepHours);
    sLambda->add_option("--weight", lambda.weight)->check(CLI::IsMember({"shares", "notional"}));
    sLambda->add_option("--clamp-eps", lambda.clampEps);
    sLambda->add_option("--volume-window-days", lambda.volumeWindowDays);
    sLambda->add_flag("--no-intercept", lambda.noIntercept, "Fit the volume regression through the origin");

    ImpactArgs impact;
    auto* sImpact = app.add_subcommand("impact", "Price change implied by lambda and order flow");
    sImpact->add_option("--lambda", impact.lambdas, "Repeatable")->required();
    sImpact->add_option("--p", impact.prices, "Repeatable");
    sImpact->add_option("--q", impact.flows, "Signed flow in million USD; repeatable");
    sImpact->add_option("--out", impact.out, "Output directory (prints to stdout when absent)");
    sImpact->add_option("--format", impact.format)->check(CLI::IsMember({"csv", "json"}));

    TradersArgs traders;
    auto* sTraders = app.add_subcommand("traders", "Hourly activity, top deciles and participation sets");
    add_common(sTraders, traders.c, true, true);
    sTraders->add_option("--quarter", traders.quarter, "e.g. 2024Q4, clipped to the window");
    sTraders->add_option("--mode", traders.mode)->check(CLI::IsMember({"distinct", "per-market"}));
    sTraders->add_option("--market", traders.markets, "Restrict to these markets; repeatable");

    SimulateArgs sim;
    auto* sSim = app.add_subcommand("simulate", "Generate a synthetic ledger with ground truth");
    sSim->add_option("--scenario", sim.scenario, "Scenario JSON")->required();
    sSim->add_option("--seed", sim.seed);
    sSim->add_option("--transactions", sim.transactions);
    sSim->add_option("--out", sim.out)->required();
    sSim->add_option("--format", sim.format, "Fill file format")->check(CLI::IsMember({"csv", "json"}));

    std::vector<std::string> argvStore{"pmflow"};
    argvStore.insert(argvStore.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argvStore) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    RunOutputs outputs;
    std::string outDir;
    try {
        if (sub == sIngest) cmd_ingest(ingest, outputs, out), outDir = ingest.c.out;
        else if (sub == sDecompose) {
            outDir = decompose.c.out;
            try {
                cmd_decompose(decompose, outputs, out);
            } catch (const AnomaliesExceeded& e) {
                write_outputs(outDir, outputs, name, portable_config(sub));
                err << "error: " << e.what() << "\n";
                return kExitAnomalies;
            }
        } else if (sub == sMetrics) cmd_metrics(metrics, outputs, out), outDir = metrics.r.c.out;
        else if (sub == sDeviation) cmd_deviation(deviation, outputs, out), outDir = deviation.c.out;
        else if (sub == sDis) cmd_disagreement(dis, outputs, out), outDir = dis.r.c.out;
        else if (sub == sLambda) cmd_lambda(lambda, outputs, out), outDir = lambda.c.out;
        else if (sub == sTraders) cmd_traders(traders, outputs, out), outDir = traders.c.out;
        else if (sub == sSim) cmd_simulate(sim, outputs, out), outDir = sim.out;
        else if (sub == sImpact) {
            const Table t = impact_table(impact);
            if (impact.out.empty()) {
                out << t.render(impact.format);
                return kExitOk;
            }
            outputs.add_table("impact", t, impact.format);
            outDir = impact.out;
        }
        write_outputs(outDir, outputs, name, portable_config(sub));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FetchError& e) {
        err << "fetch error: " << e.what();
        if (e.checkpoint()) err << " (checkpoint: block " << *e.checkpoint() << ")";
        err << "\n";
        return kExitData;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

} // namespace pmflow
