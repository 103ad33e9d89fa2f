#pragma once

// OHLCV candle series: CSV persistence and validation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "cryptodir/error.hpp"

namespace cryptodir {

struct Candle {
    std::int64_t timestamp = 0; // bar-open, seconds since epoch (UTC)
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    friend bool operator==(const Candle&, const Candle&) = default;
};

struct CandleSeries {
    std::string symbol;
    std::int64_t interval_seconds = 14400;
    std::vector<Candle> candles;

    std::size_t size() const noexcept { return candles.size(); }
    bool empty() const noexcept { return candles.empty(); }
    const Candle& operator[](std::size_t i) const { return candles[i]; }

    std::vector<double> closes() const {
        std::vector<double> out;
        out.reserve(candles.size());
        for (const auto& c : candles) out.push_back(c.close);
        return out;
    }

    friend bool operator==(const CandleSeries&, const CandleSeries&) = default;
};

struct Violation {
    std::size_t index = 0;
    std::string rule;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
    std::vector<std::pair<std::int64_t, std::int64_t>> gap_ranges;
    std::vector<Violation> violations;

    bool is_clean() const noexcept { return gap_ranges.empty() && violations.empty(); }
};

inline constexpr std::string_view kCandleCsvHeader = "timestamp,open,high,low,close,volume";

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

/// Shortest round-trip decimal in fixed notation (never an exponent).
inline std::string format_decimal(double v) {
    char buf[400];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    if (ec != std::errc()) return "nan";
    std::string s(buf, ptr);
    if (s == "-0") s = "0";
    return s;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto pos = text.find('\n');
        auto line = text.substr(0, pos);
        fn(++line_no, line);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
}

} // namespace detail

/// Parses `timestamp,open,high,low,close,volume` CSV. Rows may arrive unsorted;
/// the result is sorted ascending by timestamp.
inline CandleSeries parse_candles(std::string_view csv_text, std::string symbol,
                                  std::int64_t interval_seconds) {
    CandleSeries series{std::move(symbol), interval_seconds, {}};
    bool seen_header = false;
    detail::for_each_line(csv_text, [&](std::size_t line_no, std::string_view raw) {
        auto line = detail::trim(raw);
        if (line.empty()) return;
        if (!seen_header) {
            if (line != kCandleCsvHeader)
                throw Error(Errc::MalformedRow, "expected header '" + std::string(kCandleCsvHeader) + "'");
            seen_header = true;
            return;
        }
        auto fields = detail::split(line, ',');
        auto where = "line " + std::to_string(line_no);
        if (fields.size() != 6) throw Error(Errc::MalformedRow, where + ": expected 6 fields");
        Candle c;
        if (!detail::parse_int64(fields[0], c.timestamp))
            throw Error(Errc::MalformedRow, where + ": bad timestamp");
        double* targets[] = {&c.open, &c.high, &c.low, &c.close, &c.volume};
        for (std::size_t i = 0; i < 5; ++i)
            if (!detail::parse_double(fields[i + 1], *targets[i]))
                throw Error(Errc::MalformedRow, where + ": non-numeric field " + std::to_string(i + 1));
        if (c.high < c.low) throw Error(Errc::MalformedRow, where + ": high < low");
        if (c.open <= 0 || c.high <= 0 || c.low <= 0 || c.close <= 0)
            throw Error(Errc::MalformedRow, where + ": nonpositive price");
        series.candles.push_back(c);
    });
    if (!seen_header) throw Error(Errc::MalformedRow, "missing header");

    std::stable_sort(series.candles.begin(), series.candles.end(),
                     [](const Candle& a, const Candle& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < series.candles.size(); ++i)
        if (series.candles[i].timestamp == series.candles[i - 1].timestamp)
            throw Error(Errc::DuplicateTimestamp, std::to_string(series.candles[i].timestamp));
    return series;
}

inline std::string write_candles(const CandleSeries& series) {
    std::string out(kCandleCsvHeader);
    out += '\n';
    for (const auto& c : series.candles) {
        out += std::to_string(c.timestamp);
        for (double v : {c.open, c.high, c.low, c.close, c.volume}) {
            out += ',';
            out += detail::format_decimal(v);
        }
        out += '\n';
    }
    return out;
}

/// Reports gaps and per-candle rule violations; never throws.
inline ValidationReport validate_series(const CandleSeries& series) {
    ValidationReport report;
    const auto& cs = series.candles;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto& c = cs[i];
        if (!(c.open > 0 && c.high > 0 && c.low > 0 && c.close > 0))
            report.violations.push_back({i, "price_positive"});
        if (!(c.low <= c.high)) report.violations.push_back({i, "low_le_high"});
        if (!(c.low <= std::min(c.open, c.close))) report.violations.push_back({i, "low_le_body"});
        if (!(c.high >= std::max(c.open, c.close))) report.violations.push_back({i, "high_ge_body"});
        if (!(c.volume >= 0)) report.violations.push_back({i, "volume_nonnegative"});
        if (i == 0) continue;
        auto diff = c.timestamp - cs[i - 1].timestamp;
        if (diff <= 0)
            report.violations.push_back({i, "timestamp_increasing"});
        else if (diff != series.interval_seconds)
            report.gap_ranges.emplace_back(cs[i - 1].timestamp, c.timestamp);
    }
    return report;
}

/// Bar length in seconds for an exchange interval code such as "4h" or "1d".
inline std::int64_t interval_to_seconds(std::string_view interval) {
    if (interval.size() < 2) throw Error(Errc::BadConfig, "bad interval '" + std::string(interval) + "'");
    std::int64_t n = 0;
    if (!detail::parse_int64(interval.substr(0, interval.size() - 1), n) || n <= 0)
        throw Error(Errc::BadConfig, "bad interval '" + std::string(interval) + "'");
    switch (interval.back()) {
    case 'm': return n * 60;
    case 'h': return n * 3600;
    case 'd': return n * 86400;
    case 'w': return n * 604800;
    default: throw Error(Errc::BadConfig, "bad interval unit in '" + std::string(interval) + "'");
    }
}

} // namespace cryptodir
