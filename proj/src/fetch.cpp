#include "pmflow/fetch.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace pmflow {

using nlohmann::json;

std::optional<std::uint64_t> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string text;
    in >> text;
    if (text.empty()) return std::nullopt;
    try {
        return static_cast<std::uint64_t>(parse_micro_integer(text));
    } catch (const std::exception&) {
        throw ConfigError("corrupt checkpoint file " + path.string());
    }
}

void write_checkpoint(const std::filesystem::path& path, std::uint64_t lastBlock) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write checkpoint " + tmp);
        out << lastBlock << '\n';
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::vector<json> decode_page(const json& reply) {
    if (!reply.is_object()) throw DecodeError("RPC reply is not an object");
    if (reply.contains("error") && !reply["error"].is_null())
        throw TransportError("RPC error: " + reply["error"].dump());
    auto it = reply.find("result");
    if (it == reply.end() || !it->is_array()) throw DecodeError("RPC reply lacks a 'result' array");
    std::vector<json> out;
    out.reserve(it->size());
    for (const auto& r : *it) {
        if (!r.is_object()) throw DecodeError("RPC result entry is not an object");
        out.push_back(r);
    }
    return out;
}

} // namespace

FetchResult fetch_event_logs(const Transport& transport, BlockRange range, const FetchOptions& options) {
    if (options.pageSize == 0) throw ConfigError("page size must be positive");
    FetchResult result;
    std::uint64_t next = range.from;
    if (options.checkpointPath) {
        if (auto cp = read_checkpoint(*options.checkpointPath); cp && *cp + 1 > next) {
            next = *cp + 1;
            result.checkpoint = cp;
        }
    }
    std::uint64_t requestId = 0;
    while (next < range.to) {
        const std::uint64_t pageEnd = std::min(range.to, next + options.pageSize);
        const json request = {{"jsonrpc", "2.0"},
                              {"id", ++requestId},
                              {"method", options.method},
                              {"params", json::array({{{"fromBlock", next}, {"toBlock", pageEnd - 1}}})}};
        std::vector<json> page;
        auto backoff = options.initialBackoff;
        for (int attempt = 1;; ++attempt) {
            ++result.requests;
            try {
                page = decode_page(transport(request));
                break;
            } catch (const TransportError& e) {
                if (attempt >= options.maxAttempts)
                    throw FetchError("blocks [" + std::to_string(next) + ", " + std::to_string(pageEnd) +
                                         ") failed after " + std::to_string(attempt) + " attempts: " + e.what(),
                                     result.checkpoint);
                if (options.sleep)
                    options.sleep(backoff);
                else
                    std::this_thread::sleep_for(backoff);
                backoff = std::min(options.maxBackoff, backoff * 2);
            }
        }
        if (options.onPage) options.onPage(page);
        result.records.insert(result.records.end(), std::make_move_iterator(page.begin()),
                              std::make_move_iterator(page.end()));
        result.checkpoint = pageEnd - 1;
        if (options.checkpointPath) write_checkpoint(*options.checkpointPath, pageEnd - 1);
        next = pageEnd;
    }
    return result;
}

Transport make_http_transport(const std::string& url, std::chrono::seconds timeout) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("RPC url needs a scheme: " + url);
    const auto pathStart = url.find('/', scheme + 3);
    std::string base = url.substr(0, pathStart);
    std::string path = pathStart == std::string::npos ? "/" : url.substr(pathStart);
    return [base, path, timeout](const json& request) -> json {
        httplib::Client client(base);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        auto res = client.Post(path, request.dump(), "application/json");
        if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
        if (res->status >= 500 || res->status == 429)
            throw TransportError("HTTP status " + std::to_string(res->status));
        if (res->status != 200) throw DecodeError("unexpected HTTP status " + std::to_string(res->status));
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw DecodeError(std::string("RPC body is not JSON: ") + e.what());
        }
    };
}

} // namespace pmflow
