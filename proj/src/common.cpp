#include "pmflow/common.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace pmflow {

namespace {

using namespace std::chrono;

UnixSeconds to_unix(sys_days d) { return static_cast<UnixSeconds>(d.time_since_epoch().count()) * kSecondsPerDay; }

year_month_day civil(UnixSeconds t) {
    return year_month_day{floor<days>(sys_seconds{seconds{t}})};
}

} // namespace

std::string format_micro(Micro value) {
    const bool negative = value < 0;
    // Avoids overflow on INT64_MIN by working in unsigned magnitude.
    const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(value + 1)) + 1 : static_cast<std::uint64_t>(value);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%s%llu.%06llu", negative ? "-" : "",
                  static_cast<unsigned long long>(mag / kMicroPerUnit),
                  static_cast<unsigned long long>(mag % kMicroPerUnit));
    return buf;
}

Micro parse_micro_integer(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty integer");
    Micro out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc::result_out_of_range) throw std::out_of_range("integer out of range: " + std::string(text));
    if (ec != std::errc{} || ptr != text.data() + text.size() || out < 0 || text.front() == '+')
        throw std::invalid_argument("not a non-negative integer: " + std::string(text));
    return out;
}

Micro parse_decimal_micro(std::string_view text) {
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw std::invalid_argument("not a decimal: " + std::string(text));
    if (frac.size() > 6) throw std::invalid_argument("more than 6 fractional digits: " + std::string(text));
    Micro w = whole.empty() ? 0 : parse_micro_integer(whole);
    std::string padded(frac);
    padded.resize(6, '0');
    Micro f = parse_micro_integer(padded);
    if (w > (std::numeric_limits<Micro>::max() - f) / kMicroPerUnit) throw std::out_of_range("decimal out of range");
    Micro v = w * kMicroPerUnit + f;
    return negative ? -v : v;
}

UnixSeconds parse_utc(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    const std::string s(text);
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3)
        throw std::invalid_argument("bad UTC timestamp: " + s);
    std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty()) {
        if (rest.front() != 'T' && rest.front() != ' ') throw std::invalid_argument("bad UTC timestamp: " + s);
        const std::string tail(rest.substr(1));
        int n = 0;
        if (std::sscanf(tail.c_str(), "%2d:%2d:%2d%n", &h, &mi, &sec, &n) == 3) {
        } else if (std::sscanf(tail.c_str(), "%2d:%2d%n", &h, &mi, &n) == 2) {
            sec = 0;
        } else {
            throw std::invalid_argument("bad UTC timestamp: " + s);
        }
        std::string_view zone = std::string_view(tail).substr(static_cast<std::size_t>(n));
        if (!(zone.empty() || zone == "Z" || zone == "+00:00"))
            throw std::invalid_argument("timestamp must be UTC: " + s);
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) throw std::invalid_argument("bad UTC timestamp: " + s);
    return to_unix(sys_days{ymd}) + h * kSecondsPerHour + mi * 60 + sec;
}

std::string format_utc(UnixSeconds t) {
    const auto ymd = civil(t);
    const UnixSeconds tod = t - floor_day(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod / 3600 % 24), static_cast<int>(tod / 60 % 60), static_cast<int>(tod % 60));
    return buf;
}

std::string format_utc_date(UnixSeconds t) {
    const auto ymd = civil(t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

UnixSeconds floor_hour(UnixSeconds t) {
    UnixSeconds r = t % kSecondsPerHour;
    return t - (r < 0 ? r + kSecondsPerHour : r);
}

UnixSeconds floor_day(UnixSeconds t) {
    UnixSeconds r = t % kSecondsPerDay;
    return t - (r < 0 ? r + kSecondsPerDay : r);
}

UnixSeconds floor_month(UnixSeconds t) {
    const auto ymd = civil(t);
    return to_unix(sys_days{ymd.year() / ymd.month() / day{1}});
}

UnixSeconds next_month(UnixSeconds monthStart) {
    const auto ymd = civil(monthStart);
    return to_unix(sys_days{(ymd.year() / ymd.month() / day{1}) + months{1}});
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace pmflow
