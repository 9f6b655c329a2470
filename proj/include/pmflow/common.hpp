#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pmflow {

/// Fixed-point amount in 10^-6 units (micro-USDC or micro-shares).
using Micro = std::int64_t;

/// UTC seconds since the Unix epoch.
using UnixSeconds = std::int64_t;

inline constexpr Micro kMicroPerUnit = 1'000'000;
inline constexpr UnixSeconds kSecondsPerHour = 3600;
inline constexpr UnixSeconds kSecondsPerDay = 86400;

/// Asset id of the collateral leg (USDC) in fill records.
inline constexpr std::string_view kCollateralAssetId = "0";

enum class Side { Yes, No };

inline const char* to_string(Side s) { return s == Side::Yes ? "YES" : "NO"; }

// Error hierarchy. The CLI maps ConfigError to exit code 2 and DataError
// (and its subclasses) to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class DuplicateEventError : public DataError {
public:
    using DataError::DataError;
};

class WrongMarketError : public DataError {
public:
    using DataError::DataError;
};

/// Decimal rendering of a fixed-point amount with 6 fractional digits, e.g. 123900000 -> "123.900000".
std::string format_micro(Micro value);

/// Parses a non-negative base-10 integer string; throws std::invalid_argument or std::out_of_range.
Micro parse_micro_integer(std::string_view text);

/// Parses a decimal amount such as "123.9" or "-0.5" into micro units (at most 6 fractional digits).
Micro parse_decimal_micro(std::string_view text);

/// "2024-07-21", "2024-07-21T17:46:00Z" or "2024-07-21T17:46Z" to UTC seconds.
UnixSeconds parse_utc(std::string_view text);

/// ISO-8601 UTC rendering, "2024-07-21T17:46:00Z".
std::string format_utc(UnixSeconds t);

/// "2024-07-21".
std::string format_utc_date(UnixSeconds t);

UnixSeconds floor_hour(UnixSeconds t);
UnixSeconds floor_day(UnixSeconds t);
UnixSeconds floor_month(UnixSeconds t);
UnixSeconds next_month(UnixSeconds monthStart);

/// Shortest round-trippable decimal rendering of a double ("nan"/"inf" for non-finite values).
std::string format_double(double v);

} // namespace pmflow
