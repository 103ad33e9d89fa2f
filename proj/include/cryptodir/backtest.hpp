#pragma once

// Long-only replay of direction predictions and the trade statistics report.
//
// Rules, evaluated at each bar's close:
//   flat + prediction 1 -> buy position_qty
//   long + prediction 1 -> hold
//   long + prediction 0 -> sell
// An open position is sold at the final close. No entry is taken on the last
// bar since it could not be exited later. Fees are charged per leg on notional.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptodir/classifiers/common.hpp"
#include "cryptodir/error.hpp"
#include "cryptodir/market_data.hpp"

namespace cryptodir {

struct StrategyConfig {
    double fee_rate_per_leg = 0.00075;
    double position_qty = 1.0;
    std::string quote_currency = "USDT";

    void validate() const {
        if (!(fee_rate_per_leg >= 0.0)) throw Error(Errc::BadConfig, "fee rate must be >= 0");
        if (!(position_qty > 0.0)) throw Error(Errc::BadConfig, "position size must be > 0");
    }
};

struct Trade {
    std::int64_t entry_ts = 0;
    std::int64_t exit_ts = 0;
    double entry_price = 0.0;
    double exit_price = 0.0;
    double gross_pnl = 0.0;
    double fees = 0.0;
    double net_pnl = 0.0;
};

struct TradeLog {
    std::vector<Trade> trades;
    std::vector<double> equity_curve; // realized net pnl after each bar
    bool open_at_end = false;
};

inline TradeLog run_strategy(std::span<const std::int64_t> timestamps, std::span<const double> closes,
                             std::span<const int> preds, const StrategyConfig& cfg) {
    cfg.validate();
    if (closes.size() != preds.size() || timestamps.size() != closes.size())
        throw Error(Errc::AlignmentError, "timestamps, closes and predictions must have one entry per bar");
    TradeLog log;
    log.equity_curve.reserve(closes.size());
    const double qty = cfg.position_qty;

    std::optional<std::size_t> entry;
    double equity = 0.0;
    auto close_at = [&](std::size_t bar) {
        Trade t;
        t.entry_ts = timestamps[*entry];
        t.exit_ts = timestamps[bar];
        t.entry_price = closes[*entry];
        t.exit_price = closes[bar];
        t.gross_pnl = qty * (t.exit_price - t.entry_price);
        t.fees = cfg.fee_rate_per_leg * qty * (t.entry_price + t.exit_price);
        t.net_pnl = t.gross_pnl - t.fees;
        equity += t.net_pnl;
        log.trades.push_back(t);
        entry.reset();
    };

    for (std::size_t bar = 0; bar < closes.size(); ++bar) {
        const bool last = bar + 1 == closes.size();
        if (entry) {
            if (preds[bar] == 0 || last) close_at(bar);
        } else if (preds[bar] == 1 && !last) {
            entry = bar;
        }
        log.equity_curve.push_back(equity);
    }
    log.open_at_end = entry.has_value();
    return log;
}

/// Overload for closes without timestamps: bars are numbered 0..n-1.
inline TradeLog run_strategy(std::span<const double> closes, std::span<const int> preds, const StrategyConfig& cfg) {
    std::vector<std::int64_t> ts(closes.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<std::int64_t>(i);
    return run_strategy(ts, closes, preds, cfg);
}

/// Profit metrics are empty when there were no trades (or no losing/winning
/// side for the averages and the profit factor).
struct BacktestReport {
    double testing_accuracy = 0.0;
    std::optional<double> net_profit;
    std::size_t n_win = 0;
    std::size_t n_lose = 0;
    double total_days = 0.0;
    std::optional<double> pct_profitable;
    std::optional<double> avg_win;
    std::optional<double> avg_lose;
    std::optional<double> largest_win;
    std::optional<double> largest_lose;
    std::optional<double> profit_factor;
    double gross_profit = 0.0;
    double gross_loss = 0.0;

    bool has_trades() const noexcept { return n_win + n_lose > 0; }
};

/// Zero-pnl trades count as losses. Accuracy is filled even without trades.
inline BacktestReport compute_report(const TradeLog& log, std::span<const int> preds, std::span<const int> truth,
                                     double span_days) {
    BacktestReport r;
    r.testing_accuracy = accuracy(preds, truth);
    r.total_days = std::round(span_days);
    if (log.trades.empty()) return r;

    double net = 0.0;
    double win_sum = 0.0, lose_sum = 0.0;
    double largest_win = 0.0, largest_lose = 0.0;
    for (const auto& t : log.trades) {
        net += t.net_pnl;
        if (t.net_pnl > 0) {
            if (r.n_win == 0 || t.net_pnl > largest_win) largest_win = t.net_pnl;
            ++r.n_win;
            win_sum += t.net_pnl;
        } else {
            if (r.n_lose == 0 || t.net_pnl < largest_lose) largest_lose = t.net_pnl;
            ++r.n_lose;
            lose_sum += t.net_pnl;
        }
    }
    r.net_profit = net;
    r.gross_profit = win_sum;
    r.gross_loss = -lose_sum;
    r.pct_profitable = static_cast<double>(r.n_win) / static_cast<double>(r.n_win + r.n_lose);
    if (r.n_win > 0) {
        r.avg_win = win_sum / static_cast<double>(r.n_win);
        r.largest_win = largest_win;
    }
    if (r.n_lose > 0) {
        r.avg_lose = lose_sum / static_cast<double>(r.n_lose);
        r.largest_lose = largest_lose;
    }
    if (r.gross_loss > 0) r.profit_factor = r.gross_profit / r.gross_loss;
    return r;
}

/// Days between first and last bar, rounded to the nearest day.
inline double span_days(std::int64_t first_ts, std::int64_t last_ts) {
    return std::round(static_cast<double>(last_ts - first_ts) / 86400.0);
}

/// One buy at the first close, one sell at the last, both legs charged.
inline double buy_and_hold(std::span<const double> closes, const StrategyConfig& cfg) {
    cfg.validate();
    if (closes.size() < 2) throw Error(Errc::SeriesTooShort, "buy and hold needs two bars");
    const double first = closes.front(), last = closes.back();
    return cfg.position_qty * (last - first) - cfg.fee_rate_per_leg * cfg.position_qty * (first + last);
}

namespace detail {

inline nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

} // namespace detail

/// Report fields in table order.
inline nlohmann::ordered_json report_to_json(const BacktestReport& r) {
    nlohmann::ordered_json j;
    j["testing_accuracy"] = r.testing_accuracy;
    j["net_profit"] = detail::opt(r.net_profit);
    j["n_win"] = r.n_win;
    j["n_lose"] = r.n_lose;
    j["total_days"] = r.total_days;
    j["pct_profitable"] = detail::opt(r.pct_profitable);
    j["avg_win"] = detail::opt(r.avg_win);
    j["avg_lose"] = detail::opt(r.avg_lose);
    j["largest_win"] = detail::opt(r.largest_win);
    j["largest_lose"] = detail::opt(r.largest_lose);
    j["profit_factor"] = detail::opt(r.profit_factor);
    return j;
}

inline BacktestReport report_from_json(const nlohmann::json& j) {
    auto opt = [&](const char* k) -> std::optional<double> {
        const auto& v = j.at(k);
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    BacktestReport r;
    try {
        r.testing_accuracy = j.at("testing_accuracy").get<double>();
        r.net_profit = opt("net_profit");
        r.n_win = j.at("n_win").get<std::size_t>();
        r.n_lose = j.at("n_lose").get<std::size_t>();
        r.total_days = j.at("total_days").get<double>();
        r.pct_profitable = opt("pct_profitable");
        r.avg_win = opt("avg_win");
        r.avg_lose = opt("avg_lose");
        r.largest_win = opt("largest_win");
        r.largest_lose = opt("largest_lose");
        r.profit_factor = opt("profit_factor");
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelFormat, std::string("report: ") + e.what());
    }
    return r;
}

inline std::string trades_to_csv(const TradeLog& log) {
    std::string out = "entry_ts,exit_ts,entry_price,exit_price,gross_pnl,fees,net_pnl\n";
    for (const auto& t : log.trades) {
        out += std::to_string(t.entry_ts) + ',' + std::to_string(t.exit_ts);
        for (double v : {t.entry_price, t.exit_price, t.gross_pnl, t.fees, t.net_pnl}) {
            out += ',';
            out += detail::format_decimal(v);
        }
        out += '\n';
    }
    return out;
}

inline std::string equity_to_csv(std::span<const std::int64_t> timestamps, const TradeLog& log) {
    std::string out = "timestamp,equity\n";
    for (std::size_t i = 0; i < log.equity_curve.size(); ++i)
        out += std::to_string(timestamps[i]) + ',' + detail::format_decimal(log.equity_curve[i]) + '\n';
    return out;
}

/// Histogram of per-trade net pnl over `bins` equal-width bins spanning the observed range.
inline std::string pnl_histogram_csv(const TradeLog& log, std::size_t bins = 20) {
    std::string out = "bin_low,bin_high,count\n";
    if (log.trades.empty() || bins == 0) return out;
    double lo = log.trades.front().net_pnl, hi = lo;
    for (const auto& t : log.trades) {
        lo = std::min(lo, t.net_pnl);
        hi = std::max(hi, t.net_pnl);
    }
    if (hi == lo) bins = 1;
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& t : log.trades) {
        auto b = static_cast<std::size_t>((t.net_pnl - lo) / width);
        counts[std::min(b, bins - 1)]++;
    }
    for (std::size_t b = 0; b < bins; ++b) {
        double b_lo = lo + width * static_cast<double>(b);
        double b_hi = b + 1 == bins ? std::max(hi, b_lo) : lo + width * static_cast<double>(b + 1);
        out += detail::format_decimal(b_lo) + ',' + detail::format_decimal(b_hi) + ',' + std::to_string(counts[b]) + '\n';
    }
    return out;
}

} // namespace cryptodir
