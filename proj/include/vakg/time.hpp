#pragma once

// Minimal RFC 3339 timestamp handling. Wall clocks are advisory payload
// on update nodes; logical steps are the time axis, so nothing here
// affects graph structure.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>

namespace vakg {

// "2026-01-05T12:34:56Z", "2026-01-05T12:34:56.25+02:00", ... -> epoch
// seconds (UTC). Returns nullopt on anything else.
inline std::optional<double> parse_rfc3339_seconds(const std::string& text) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0;
    double second = 0.0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%lf%n", &year, &month, &day, &hour,
                    &minute, &second, &consumed) != 6) {
        return std::nullopt;
    }
    const std::string rest = text.substr(static_cast<std::size_t>(consumed));
    long offset_seconds = 0;
    if (rest == "Z" || rest == "z") {
        offset_seconds = 0;
    } else {
        int off_hour = 0, off_min = 0;
        char sign = 0;
        if (std::sscanf(rest.c_str(), "%c%2d:%2d", &sign, &off_hour, &off_min) != 3 ||
            (sign != '+' && sign != '-')) {
            return std::nullopt;
        }
        offset_seconds = (off_hour * 3600L + off_min * 60L) * (sign == '-' ? -1 : 1);
    }
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = 0;
    const time_t base = timegm(&tm);
    if (base == static_cast<time_t>(-1)) {
        return std::nullopt;
    }
    return static_cast<double>(base) + second - static_cast<double>(offset_seconds);
}

// Integer epoch seconds -> "YYYY-MM-DDThh:mm:ssZ".
inline std::string format_rfc3339(std::int64_t epoch_seconds) {
    std::tm tm{};
    const time_t t = static_cast<time_t>(epoch_seconds);
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace vakg
