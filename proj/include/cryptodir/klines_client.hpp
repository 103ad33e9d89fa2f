#pragma once

// Paged download of candles from a klines-style HTTP endpoint.
//
// Wire format: GET {endpoint}?symbol=S&interval=I&startTime=ms&endTime=ms&limit=N
// answered by a JSON array of arrays, [open_time_ms, "open", "high", "low",
// "close", "volume", ...]. Extra trailing entries are ignored.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cryptodir/error.hpp"
#include "cryptodir/market_data.hpp"

namespace cryptodir {

struct FetchOptions {
    int max_retries_on_429 = 3;
    std::chrono::milliseconds retry_backoff{1000};
    std::chrono::seconds timeout{30};
};

namespace detail {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw Error(Errc::BadConfig, "endpoint must be an absolute URL: " + std::string(url));
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

inline double kline_number(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    double out = 0.0;
    if (v.is_string() && parse_double(v.get_ref<const std::string&>(), out)) return out;
    throw Error(Errc::DecodeError, "kline field is not numeric: " + v.dump());
}

} // namespace detail

/// Returns every bar with open time in [start_ts, end_ts), seconds. Pages advance
/// from the last returned bar plus one interval until a short page or the range end.
inline CandleSeries fetch_klines(const std::string& endpoint, const std::string& symbol,
                                 const std::string& interval, std::int64_t start_ts,
                                 std::int64_t end_ts, int page_limit,
                                 const FetchOptions& options = {}) {
    if (page_limit < 1) throw Error(Errc::BadConfig, "page_limit must be >= 1");
    const auto step = interval_to_seconds(interval);
    const auto url = detail::split_url(endpoint);

    httplib::Client client(url.base);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);

    CandleSeries series{symbol, step, {}};
    std::int64_t cursor = start_ts;
    while (cursor < end_ts) {
        httplib::Params params{
            {"symbol", symbol},
            {"interval", interval},
            {"startTime", std::to_string(cursor * 1000)},
            {"endTime", std::to_string(end_ts * 1000 - 1)},
            {"limit", std::to_string(page_limit)},
        };
        httplib::Result res;
        for (int attempt = 0;; ++attempt) {
            res = client.Get(url.path, params, httplib::Headers{});
            if (!res) throw Error(Errc::HttpError, "request failed: " + httplib::to_string(res.error()));
            if (res->status != 429 || attempt >= options.max_retries_on_429) break;
            std::this_thread::sleep_for(options.retry_backoff);
        }
        if (res->status < 200 || res->status >= 300)
            throw Error(Errc::HttpError, "HTTP status " + std::to_string(res->status));

        nlohmann::json page;
        try {
            page = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::DecodeError, e.what());
        }
        if (!page.is_array()) throw Error(Errc::DecodeError, "response is not a JSON array");

        std::int64_t last_open = cursor - step;
        for (const auto& row : page) {
            if (!row.is_array() || row.size() < 6 || !row[0].is_number_integer())
                throw Error(Errc::DecodeError, "kline row has unexpected shape: " + row.dump());
            auto open_ms = row[0].get<std::int64_t>();
            Candle c{open_ms / 1000,
                     detail::kline_number(row[1]), detail::kline_number(row[2]),
                     detail::kline_number(row[3]), detail::kline_number(row[4]),
                     detail::kline_number(row[5])};
            last_open = std::max(last_open, c.timestamp);
            if (c.timestamp < cursor || c.timestamp >= end_ts) continue;
            if (!series.candles.empty() && c.timestamp <= series.candles.back().timestamp) continue;
            series.candles.push_back(c);
        }
        if (static_cast<int>(page.size()) < page_limit) break;
        if (last_open < cursor) throw Error(Errc::DecodeError, "endpoint did not advance past startTime");
        cursor = last_open + step;
    }
    if (series.candles.empty()) throw Error(Errc::EmptyRange, "no bars returned for " + symbol);
    return series;
}

} // namespace cryptodir
