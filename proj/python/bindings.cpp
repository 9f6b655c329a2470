#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pmflow/cli.hpp"
#include "pmflow/ctf.hpp"
#include "pmflow/decompose.hpp"
#include "pmflow/metrics.hpp"
#include "pmflow/microstructure.hpp"
#include "pmflow/prices.hpp"
#include "pmflow/synth.hpp"

namespace py = pybind11;
using namespace pmflow;

namespace {

py::dict components_dict(const VolumeComponents& c) {
    py::dict d;
    d["yes_trade"] = c.yesTrade;
    d["no_trade"] = c.noTrade;
    d["yes_mint"] = c.yesMint;
    d["no_mint"] = c.noMint;
    d["yes_burn"] = c.yesBurn;
    d["no_burn"] = c.noBurn;
    d["buy_vol"] = c.buyVol;
    d["sell_vol"] = c.sellVol;
    return d;
}

py::dict row_dict(const DecomposedTx& r) {
    py::dict d = components_dict(r.components);
    d["block"] = r.block;
    d["tx_index"] = r.txIndex;
    d["timestamp"] = r.timestamp;
    d["market"] = r.market;
    d["kind"] = to_string(r.kind);
    d["tie_break"] = r.tieBreak;
    return d;
}

py::dict decompose_files(const std::vector<std::filesystem::path>& fills, const std::filesystem::path& markets) {
    const auto cfg = load_market_config(markets);
    const auto result = decompose_ledger(group_transactions(read_fill_shards(fills)), cfg.markets);
    py::list rows, quarantined;
    for (const auto& r : result.rows) rows.append(row_dict(r));
    for (const auto& q : result.quarantined) {
        py::dict d;
        d["block"] = q.block;
        d["tx_index"] = q.txIndex;
        d["market"] = q.market;
        d["reason"] = q.reason;
        quarantined.append(d);
    }
    py::dict out;
    out["rows"] = rows;
    out["quarantined"] = quarantined;
    out["units"] = result.units;
    out["tie_breaks"] = result.tieBreaks;
    return out;
}

py::dict side_measures(Micro trade, Micro mint, Micro burn) {
    const SideMeasures m = measure({trade, mint, burn});
    py::dict d;
    d["exchange_equivalent_volume"] = m.vE;
    d["net_inflow"] = m.f;
    d["gross_activity"] = m.vG;
    return d;
}

py::list lambda_series(const std::vector<double>& dTheta, const std::vector<double>& flow, UnixSeconds firstHour,
                       std::size_t windowHours, UnixSeconds stepSeconds) {
    if (dTheta.size() != flow.size()) throw std::invalid_argument("dtheta and flow differ in length");
    std::vector<BarIncrement> inc;
    for (std::size_t i = 0; i < flow.size(); ++i)
        inc.push_back({firstHour + static_cast<UnixSeconds>(i) * kSecondsPerHour, dTheta[i], flow[i]});
    py::list out;
    for (const auto& e : rolling_kyle_lambda(inc, {windowHours, stepSeconds})) {
        py::dict d;
        d["date"] = e.date;
        d["lambda"] = e.lambda ? py::cast(*e.lambda) : py::none();
        d["se"] = e.standardError ? py::cast(*e.standardError) : py::none();
        d["n"] = e.observations;
        out.append(d);
    }
    return out;
}

py::dict regression(const std::vector<double>& x, const std::vector<double>& y, bool withIntercept) {
    const auto r = ols(x, y, withIntercept);
    py::dict d;
    d["slope"] = r.slope;
    d["intercept"] = r.intercept ? py::cast(*r.intercept) : py::none();
    d["slope_t"] = r.slopeT;
    d["intercept_t"] = r.interceptT ? py::cast(*r.interceptT) : py::none();
    d["r2"] = r.r2;
    d["adjusted_r2"] = r.adjustedR2;
    d["n"] = r.n;
    return d;
}

std::vector<std::optional<double>> correlation(const std::vector<double>& a, const std::vector<double>& b,
                                               std::size_t window, std::size_t step) {
    std::vector<UnixSeconds> days(a.size());
    for (std::size_t i = 0; i < days.size(); ++i) days[i] = static_cast<UnixSeconds>(i);
    std::vector<std::optional<double>> out;
    for (const auto& p : rolling_correlation(a, b, days, window, step)) out.push_back(p.value);
    return out;
}

using Holdings = std::map<std::pair<std::size_t, std::string>, Micro>;

Portfolio to_portfolio(const Holdings& h, Micro cash) {
    Portfolio p;
    p.cash = cash;
    for (const auto& [k, q] : h) {
        if (k.second != "YES" && k.second != "NO") throw std::invalid_argument("side must be YES or NO");
        p.add(k.first, k.second == "YES" ? Side::Yes : Side::No, q);
    }
    return p;
}

py::tuple convert(std::size_t outcomes, const Holdings& holdings, Micro cash, const std::vector<std::size_t>& selected,
                  Micro quantity) {
    const CategoricalMarket m(outcomes);
    const Portfolio out = convert_positions(to_portfolio(holdings, cash), selected, quantity, m);
    Holdings h;
    for (const auto& [k, q] : out.holdings) h[{k.first, to_string(k.second)}] = q;
    return py::make_tuple(h, out.cash);
}

Micro payoff(std::size_t outcomes, const Holdings& holdings, Micro cash, std::size_t winner) {
    return payoff_at_resolution(to_portfolio(holdings, cash), CategoricalMarket(outcomes), winner);
}

py::dict simulate(const std::filesystem::path& scenarioPath, std::optional<std::uint64_t> seed,
                  std::optional<std::size_t> transactions) {
    SyntheticScenario sc = load_scenario(scenarioPath);
    if (seed) sc.seed = *seed;
    if (transactions) sc.transactions = *transactions;
    const auto led = generate_synthetic_ledger(sc);
    std::string fills;
    for (const auto& f : led.fills) fills += serialize_fill(f, RecordFormat::Jsonl) + "\n";
    py::list truth;
    for (const auto& t : led.truth) {
        py::dict d = components_dict(t.components);
        d["block"] = t.block;
        d["tx_index"] = t.txIndex;
        d["market"] = t.market;
        d["kind"] = to_string(t.kind);
        truth.append(d);
    }
    py::dict out;
    out["fills_jsonl"] = fills;
    out["truth"] = truth;
    out["arbitrage_rounds"] = led.arbitrage.size();
    return out;
}

py::tuple cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_pmflow, m) {
    m.doc() = "Prediction-market ledger analytics";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    m.def("decompose", &decompose_files, py::arg("fills"), py::arg("markets"),
          "Decompose fill files against a market config; amounts in micro-USDC.");
    m.def("measures", &side_measures, py::arg("trade"), py::arg("mint"), py::arg("burn"));
    m.def("log_odds", [](double p, double eps) { return log_odds(p, eps).theta; }, py::arg("p"),
          py::arg("eps") = kDefaultClampEpsilon);
    m.def("inverse_log_odds", &inverse_log_odds, py::arg("theta"));
    m.def("price_impact", &price_impact_delta_p, py::arg("lam"), py::arg("p"), py::arg("q"));
    m.def("rolling_kyle_lambda", &lambda_series, py::arg("dtheta"), py::arg("flow"), py::arg("first_hour"),
          py::arg("window_hours") = 720, py::arg("step_seconds") = kSecondsPerDay);
    m.def("ols", &regression, py::arg("x"), py::arg("y"), py::arg("with_intercept") = true);
    m.def("rolling_correlation", &correlation, py::arg("a"), py::arg("b"), py::arg("window") = 90,
          py::arg("step") = 1);
    m.def("convert_positions", &convert, py::arg("outcomes"), py::arg("holdings"), py::arg("cash"),
          py::arg("selected"), py::arg("quantity"));
    m.def("payoff", &payoff, py::arg("outcomes"), py::arg("holdings"), py::arg("cash"), py::arg("winner"));
    m.def("simulate", &simulate, py::arg("scenario"), py::arg("seed") = py::none(),
          py::arg("transactions") = py::none());
    m.def("run_cli", &cli, py::arg("args"), "Run a pmflow subcommand; returns (exit_code, stdout, stderr).");
    m.attr("__version__") = kVersion;
}
