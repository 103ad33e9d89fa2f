#pragma once

// Technical indicators over a candle series. Each function returns per-bar
// columns aligned with its input; entries inside the warm-up are empty.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryptodir/error.hpp"
#include "cryptodir/market_data.hpp"

namespace cryptodir {

struct IndicatorColumn {
    std::string name;
    int period = 0;
    std::vector<std::optional<double>> values;

    std::size_t size() const noexcept { return values.size(); }

    /// Index of the first defined entry (== size() if none).
    std::size_t warmup() const noexcept {
        auto it = std::find_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
        return static_cast<std::size_t>(it - values.begin());
    }
};

struct DmiTriple {
    IndicatorColumn di_plus;
    IndicatorColumn di_minus;
    IndicatorColumn dx;
};

struct BollingerTriple {
    IndicatorColumn mid;
    IndicatorColumn upper;
    IndicatorColumn lower;
};

namespace detail {

inline void check_period(int period) {
    if (period < 1) throw Error(Errc::BadPeriod, "period must be >= 1, got " + std::to_string(period));
}

inline IndicatorColumn empty_column(std::string name, int period, std::size_t n) {
    return {std::move(name), period, std::vector<std::optional<double>>(n)};
}

} // namespace detail

inline IndicatorColumn sma(std::span<const double> values, int period) {
    detail::check_period(period);
    auto out = detail::empty_column("sma" + std::to_string(period), period, values.size());
    const auto p = static_cast<std::size_t>(period);
    // Each window is summed directly so long series do not accumulate drift.
    for (std::size_t i = p - 1; i < values.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = i + 1 - p; j <= i; ++j) sum += values[j];
        out.values[i] = sum / period;
    }
    return out;
}

/// Seeded with the SMA of the first `period` values, then
/// ema = a*x + (1-a)*ema_prev with a = 2/(period+1).
inline IndicatorColumn ema(std::span<const double> values, int period) {
    detail::check_period(period);
    auto out = detail::empty_column("ema" + std::to_string(period), period, values.size());
    const auto p = static_cast<std::size_t>(period);
    if (values.size() < p) return out;
    const double alpha = 2.0 / (period + 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < p; ++i) acc += values[i];
    acc /= period;
    out.values[p - 1] = acc;
    for (std::size_t i = p; i < values.size(); ++i) {
        acc = alpha * values[i] + (1.0 - alpha) * acc;
        out.values[i] = acc;
    }
    return out;
}

inline std::vector<double> typical_price(const CandleSeries& series) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& c : series.candles) out.push_back((c.high + c.low + c.close) / 3.0);
    return out;
}

inline IndicatorColumn cci(const CandleSeries& series, int period) {
    detail::check_period(period);
    const auto tp = typical_price(series);
    auto out = detail::empty_column("cci" + std::to_string(period), period, tp.size());
    const auto p = static_cast<std::size_t>(period);
    for (std::size_t i = p - 1; i < tp.size(); ++i) {
        double ma = 0.0;
        for (std::size_t j = i + 1 - p; j <= i; ++j) ma += tp[j];
        ma /= period;
        double md = 0.0;
        for (std::size_t j = i + 1 - p; j <= i; ++j) md += std::abs(tp[j] - ma);
        md /= period;
        out.values[i] = md == 0.0 ? 0.0 : (tp[i] - ma) / (0.015 * md);
    }
    return out;
}

namespace detail {

inline double rsi_from_averages(double avg_gain, double avg_loss) {
    // zero loss wins over zero gain, so a flat series reads 100
    if (avg_loss == 0.0) return 100.0;
    if (avg_gain == 0.0) return 0.0;
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
}

} // namespace detail

/// First value at bar `period` from plain averages of the first `period` changes;
/// afterwards avg = (avg_prev*(period-1) + current)/period for gains and losses.
inline IndicatorColumn rsi(std::span<const double> closes, int period) {
    detail::check_period(period);
    const auto p = static_cast<std::size_t>(period);
    if (closes.size() < p + 1)
        throw Error(Errc::SeriesTooShort, "rsi" + std::to_string(period) + " needs " +
                                              std::to_string(p + 1) + " closes");
    auto out = detail::empty_column("rsi" + std::to_string(period), period, closes.size());
    double gain = 0.0;
    double loss = 0.0;
    for (std::size_t i = 1; i <= p; ++i) {
        double d = closes[i] - closes[i - 1];
        if (d > 0) gain += d; else loss -= d;
    }
    gain /= period;
    loss /= period;
    out.values[p] = detail::rsi_from_averages(gain, loss);
    for (std::size_t i = p + 1; i < closes.size(); ++i) {
        double d = closes[i] - closes[i - 1];
        gain = (gain * (period - 1) + std::max(d, 0.0)) / period;
        loss = (loss * (period - 1) + std::max(-d, 0.0)) / period;
        out.values[i] = detail::rsi_from_averages(gain, loss);
    }
    return out;
}

/// Directional movement with Wilder running sums (seeded by the sum of the
/// first `period` raw values, S = S - S/period + x afterwards).
/// DI = 100 * S(DM)/S(TR); both DI are 0 when S(TR) is 0, and DX is 0 when DI+ + DI- is 0.
inline DmiTriple dmi(const CandleSeries& series, int period) {
    detail::check_period(period);
    const auto p = static_cast<std::size_t>(period);
    const auto n = series.size();
    if (n < p + 1)
        throw Error(Errc::SeriesTooShort, "dmi" + std::to_string(period) + " needs " +
                                              std::to_string(p + 1) + " bars");
    const auto tag = std::to_string(period);
    DmiTriple out{detail::empty_column("di_plus" + tag, period, n),
                  detail::empty_column("di_minus" + tag, period, n),
                  detail::empty_column("dx" + tag, period, n)};

    std::vector<double> plus_dm(n, 0.0), minus_dm(n, 0.0), tr(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const auto& cur = series[i];
        const auto& prev = series[i - 1];
        double up = cur.high - prev.high;
        double down = prev.low - cur.low;
        plus_dm[i] = (up > down && up > 0) ? up : 0.0;
        minus_dm[i] = (down > up && down > 0) ? down : 0.0;
        tr[i] = std::max({cur.high - cur.low, std::abs(cur.high - prev.close), std::abs(cur.low - prev.close)});
    }

    double s_plus = 0.0, s_minus = 0.0, s_tr = 0.0;
    for (std::size_t i = 1; i <= p; ++i) {
        s_plus += plus_dm[i];
        s_minus += minus_dm[i];
        s_tr += tr[i];
    }
    for (std::size_t i = p; i < n; ++i) {
        if (i > p) {
            s_plus = s_plus - s_plus / period + plus_dm[i];
            s_minus = s_minus - s_minus / period + minus_dm[i];
            s_tr = s_tr - s_tr / period + tr[i];
        }
        double dip = s_tr > 0 ? 100.0 * s_plus / s_tr : 0.0;
        double dim = s_tr > 0 ? 100.0 * s_minus / s_tr : 0.0;
        double denom = dip + dim;
        out.di_plus.values[i] = dip;
        out.di_minus.values[i] = dim;
        out.dx.values[i] = denom > 0 ? 100.0 * std::abs(dip - dim) / denom : 0.0;
    }
    return out;
}

inline IndicatorColumn macd(std::span<const double> closes) {
    if (closes.size() < 26) throw Error(Errc::SeriesTooShort, "macd needs 26 closes");
    auto fast = ema(closes, 12);
    auto slow = ema(closes, 26);
    auto out = detail::empty_column("macd", 26, closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i)
        if (fast.values[i] && slow.values[i]) out.values[i] = *fast.values[i] - *slow.values[i];
    return out;
}

/// Bands over typical price with the population standard deviation of the trailing window.
inline BollingerTriple bollinger(const CandleSeries& series, int n, double m) {
    detail::check_period(n);
    if (!(m >= 0.0)) throw Error(Errc::BadConfig, "bollinger width must be >= 0");
    const auto tp = typical_price(series);
    const auto len = tp.size();
    BollingerTriple out{detail::empty_column("boll_mid", n, len),
                        detail::empty_column("boll_upper", n, len),
                        detail::empty_column("boll_lower", n, len)};
    const auto w = static_cast<std::size_t>(n);
    for (std::size_t i = w - 1; i < len; ++i) {
        double mean = 0.0;
        for (std::size_t j = i + 1 - w; j <= i; ++j) mean += tp[j];
        mean /= n;
        double var = 0.0;
        for (std::size_t j = i + 1 - w; j <= i; ++j) var += (tp[j] - mean) * (tp[j] - mean);
        double sd = std::sqrt(var / n);
        double upper = mean + m * sd;
        double lower = mean - m * sd;
        out.upper.values[i] = upper;
        out.lower.values[i] = lower;
        out.mid.values[i] = (upper + lower) / 2.0;
    }
    return out;
}

} // namespace cryptodir
