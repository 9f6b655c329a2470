#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmflow/common.hpp"

namespace pmflow {

/// Half-open block range [from, to).
struct BlockRange {
    std::uint64_t from = 0;
    std::uint64_t to = 0;
};

/// Raised by a Transport when the request never reached a usable reply (retryable).
class TransportError : public Error {
public:
    using Error::Error;
};

/// Reply that arrived but does not have the expected shape (not retried).
class DecodeError : public DataError {
public:
    using DataError::DataError;
};

/// Retries exhausted. `checkpoint` is the last fully ingested block, if any page completed.
class FetchError : public Error {
public:
    FetchError(const std::string& what, std::optional<std::uint64_t> checkpoint)
        : Error(what), checkpoint_(checkpoint) {}
    std::optional<std::uint64_t> checkpoint() const { return checkpoint_; }

private:
    std::optional<std::uint64_t> checkpoint_;
};

/// Sends one JSON-RPC request object and returns the decoded reply object.
using Transport = std::function<nlohmann::json(const nlohmann::json& request)>;

struct FetchOptions {
    std::uint64_t pageSize = 1000;
    int maxAttempts = 4;
    std::chrono::milliseconds initialBackoff{200};
    std::chrono::milliseconds maxBackoff{5000};
    /// When set, progress is persisted here after each page and resumed from on start.
    std::optional<std::filesystem::path> checkpointPath;
    std::string method = "pm_getOrderFilled";
    /// Replaced in tests to avoid real sleeps.
    std::function<void(std::chrono::milliseconds)> sleep;
    /// Called with each page's records as soon as the page completes.
    std::function<void(const std::vector<nlohmann::json>&)> onPage;
};

struct FetchResult {
    std::vector<nlohmann::json> records;
    std::size_t requests = 0;
    std::optional<std::uint64_t> checkpoint;
};

/// Pages through `range` with bounded requests ({"fromBlock", "toBlock"} inclusive, as with eth_getLogs).
FetchResult fetch_event_logs(const Transport& transport, BlockRange range, const FetchOptions& options);

std::optional<std::uint64_t> read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& path, std::uint64_t lastBlock);

/// JSON-RPC over HTTP POST, e.g. "http://127.0.0.1:8545/rpc".
Transport make_http_transport(const std::string& url, std::chrono::seconds timeout = std::chrono::seconds{30});

} // namespace pmflow
