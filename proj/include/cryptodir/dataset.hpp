#pragma once

// Supervised dataset construction: 19-column indicator frame, range scaling,
// fee-threshold labels, sliding windows and the chronological split.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cryptodir/error.hpp"
#include "cryptodir/indicators.hpp"
#include "cryptodir/market_data.hpp"

namespace cryptodir {

inline constexpr std::size_t kFrameColumns = 19;

inline constexpr std::array<std::string_view, kFrameColumns> kColumnRoster{
    "open",       "high",       "low",        "close",   "volume",
    "cci14",      "cci30",      "rsi14",      "rsi30",   "di_plus14",
    "di_minus14", "dx14",       "macd",       "ema12",   "ema26",
    "boll_mid",   "boll_upper", "boll_lower", "typical_price",
};

inline constexpr std::size_t kDefaultWindow = 60;

/// Rows of fully defined feature values, row-major, warm-up rows removed.
class FeatureFrame {
public:
    FeatureFrame() = default;
    FeatureFrame(std::vector<std::int64_t> timestamps, std::vector<double> cells, std::size_t first_bar)
        : timestamps_(std::move(timestamps)), cells_(std::move(cells)), first_bar_(first_bar) {
        if (cells_.size() != timestamps_.size() * kFrameColumns)
            throw Error(Errc::DimensionMismatch, "frame cells do not match row count");
    }

    std::size_t rows() const noexcept { return timestamps_.size(); }
    static constexpr std::size_t cols() noexcept { return kFrameColumns; }
    /// Index of the first kept row in the source series.
    std::size_t first_bar() const noexcept { return first_bar_; }

    const std::vector<std::int64_t>& timestamps() const noexcept { return timestamps_; }
    std::span<const double> row(std::size_t r) const {
        return {cells_.data() + r * kFrameColumns, kFrameColumns};
    }
    double at(std::size_t r, std::size_t c) const { return cells_[r * kFrameColumns + c]; }
    double& at(std::size_t r, std::size_t c) { return cells_[r * kFrameColumns + c]; }
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
        return out;
    }
    const std::vector<double>& cells() const noexcept { return cells_; }

    friend bool operator==(const FeatureFrame&, const FeatureFrame&) = default;

private:
    std::vector<std::int64_t> timestamps_;
    std::vector<double> cells_;
    std::size_t first_bar_ = 0;
};

struct Sample {
    std::vector<double> features;
    int label = 0;
    std::int64_t anchor_ts = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct LabelSpec {
    double threshold = 0.0015;
    int horizon_bars = 1;
};

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> test;
    double ratio = 0.95;
};

/// Per-column divisors (max - min over the stats rows). A zero divisor marks a
/// degenerate constant column, which scales to 0.
struct ScalingStats {
    std::vector<double> divisors;

    bool degenerate(std::size_t c) const { return divisors.at(c) == 0.0; }

    FeatureFrame apply(const FeatureFrame& frame) const {
        if (divisors.size() != kFrameColumns) throw Error(Errc::DimensionMismatch, "scaling stats width");
        std::vector<double> cells(frame.cells());
        for (std::size_t r = 0; r < frame.rows(); ++r)
            for (std::size_t c = 0; c < kFrameColumns; ++c) {
                auto& v = cells[r * kFrameColumns + c];
                v = divisors[c] == 0.0 ? 0.0 : v / divisors[c];
            }
        return {frame.timestamps(), std::move(cells), frame.first_bar()};
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < divisors.size(); ++c) j[std::string(kColumnRoster[c])] = divisors[c];
        return j;
    }

    static ScalingStats from_json(const nlohmann::json& j) {
        ScalingStats s;
        try {
            for (auto name : kColumnRoster) s.divisors.push_back(j.at(std::string(name)).get<double>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ModelFormat, std::string("scaling stats: ") + e.what());
        }
        return s;
    }

    friend bool operator==(const ScalingStats&, const ScalingStats&) = default;
};

/// Bars dropped at the start of the frame: the latest first-defined index over the roster.
inline std::size_t frame_warmup() {
    // cci30 -> 29, rsi30 -> 30, dmi14 -> 14, macd/ema26 -> 25, bollinger(20) -> 19
    return 30;
}

inline FeatureFrame augment_frame(const CandleSeries& series) {
    if (!validate_series(series).is_clean())
        throw Error(Errc::DirtySeries, "series has gaps or invalid candles; choose a clean range");
    const auto warm = frame_warmup();
    if (series.size() <= warm)
        throw Error(Errc::SeriesTooShort, "need more than " + std::to_string(warm) + " bars");

    const auto closes = series.closes();
    const auto tp = typical_price(series);
    auto dm = dmi(series, 14);
    auto bb = bollinger(series, 20, 2.0);
    std::vector<IndicatorColumn> indicator_columns;
    indicator_columns.reserve(kFrameColumns - 5);
    indicator_columns.push_back(cci(series, 14));
    indicator_columns.push_back(cci(series, 30));
    indicator_columns.push_back(rsi(closes, 14));
    indicator_columns.push_back(rsi(closes, 30));
    indicator_columns.push_back(std::move(dm.di_plus));
    indicator_columns.push_back(std::move(dm.di_minus));
    indicator_columns.push_back(std::move(dm.dx));
    indicator_columns.push_back(macd(closes));
    indicator_columns.push_back(ema(closes, 12));
    indicator_columns.push_back(ema(closes, 26));
    indicator_columns.push_back(std::move(bb.mid));
    indicator_columns.push_back(std::move(bb.upper));
    indicator_columns.push_back(std::move(bb.lower));

    const auto rows = series.size() - warm;
    std::vector<std::int64_t> ts(rows);
    std::vector<double> cells(rows * kFrameColumns);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto bar = r + warm;
        const auto& c = series[bar];
        ts[r] = c.timestamp;
        double* row = cells.data() + r * kFrameColumns;
        row[0] = c.open;
        row[1] = c.high;
        row[2] = c.low;
        row[3] = c.close;
        row[4] = c.volume;
        for (std::size_t k = 0; k < indicator_columns.size(); ++k) {
            const auto& v = indicator_columns[k].values[bar];
            if (!v) throw Error(Errc::SeriesTooShort, indicator_columns[k].name + " undefined after warm-up");
            row[5 + k] = *v;
        }
        row[18] = tp[bar];
    }
    return {std::move(ts), std::move(cells), warm};
}

/// Divisors from rows [0, stats_rows) of the frame.
inline ScalingStats fit_scaling(const FeatureFrame& frame, std::size_t stats_rows) {
    if (stats_rows == 0 || stats_rows > frame.rows())
        throw Error(Errc::EmptyStats, "scaling needs 1.." + std::to_string(frame.rows()) + " rows");
    ScalingStats stats;
    stats.divisors.resize(kFrameColumns);
    for (std::size_t c = 0; c < kFrameColumns; ++c) {
        double lo = frame.at(0, c), hi = lo;
        for (std::size_t r = 1; r < stats_rows; ++r) {
            lo = std::min(lo, frame.at(r, c));
            hi = std::max(hi, frame.at(r, c));
        }
        stats.divisors[c] = hi - lo;
    }
    return stats;
}

struct ScaledFrame {
    FeatureFrame frame;
    ScalingStats stats;
};

/// Fits divisors on the first `stats_rows` rows and scales the whole frame with them.
inline ScaledFrame scale_frame(const FeatureFrame& frame, std::size_t stats_rows) {
    auto stats = fit_scaling(frame, stats_rows);
    auto scaled = stats.apply(frame);
    return {std::move(scaled), std::move(stats)};
}

/// Per-bar labels: 1 iff close[t+h]/close[t] - 1 > threshold. The last h bars stay unlabeled.
inline std::vector<std::optional<int>> make_labels(const CandleSeries& series, const LabelSpec& spec) {
    if (!(spec.threshold > 0.0)) throw Error(Errc::BadConfig, "label threshold must be > 0");
    if (spec.horizon_bars < 1) throw Error(Errc::BadConfig, "horizon_bars must be >= 1");
    const auto h = static_cast<std::size_t>(spec.horizon_bars);
    if (series.size() < h + 1) throw Error(Errc::SeriesTooShort, "labels need horizon + 1 bars");
    std::vector<std::optional<int>> labels(series.size());
    for (std::size_t t = 0; t + h < series.size(); ++t) {
        // close[t+h] > close[t] * (1 + threshold); the ratio form misrounds
        // decimal prices sitting exactly on the boundary (100 -> 100.15).
        labels[t] = series[t + h].close > series[t].close * (1.0 + spec.threshold) ? 1 : 0;
    }
    return labels;
}

/// Labels re-indexed onto frame rows (drops the warm-up bars).
inline std::vector<std::optional<int>> align_labels(const FeatureFrame& frame,
                                                    std::span<const std::optional<int>> bar_labels) {
    if (bar_labels.size() != frame.first_bar() + frame.rows())
        throw Error(Errc::AlignmentError, "labels do not cover the frame's source series");
    auto first = bar_labels.begin() + static_cast<std::ptrdiff_t>(frame.first_bar());
    return {first, bar_labels.end()};
}

/// One sample per labeled row r >= window-1: rows r-window+1..r flattened, oldest first.
inline std::vector<Sample> window_samples(const FeatureFrame& frame,
                                          std::span<const std::optional<int>> row_labels,
                                          std::size_t window = kDefaultWindow) {
    if (window == 0) throw Error(Errc::WindowTooLarge, "window must be >= 1");
    if (row_labels.size() != frame.rows())
        throw Error(Errc::AlignmentError, "one label slot per frame row required");
    std::vector<Sample> out;
    if (frame.rows() < window) return out;
    const auto& cells = frame.cells();
    for (std::size_t r = window - 1; r < frame.rows(); ++r) {
        if (!row_labels[r]) continue;
        Sample s;
        auto begin = cells.begin() + static_cast<std::ptrdiff_t>((r + 1 - window) * kFrameColumns);
        s.features.assign(begin, begin + static_cast<std::ptrdiff_t>(window * kFrameColumns));
        s.label = *row_labels[r];
        s.anchor_ts = frame.timestamps()[r];
        out.push_back(std::move(s));
    }
    return out;
}

inline std::size_t train_count(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
}

inline DatasetSplit split_dataset(std::vector<Sample> samples, double ratio = 0.95) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(Errc::BadConfig, "split ratio must be in (0,1)");
    if (samples.size() < 2) throw Error(Errc::TooFewSamples, "need at least 2 samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].anchor_ts <= samples[i - 1].anchor_ts)
            throw Error(Errc::AlignmentError, "samples must be sorted by anchor_ts");
    const auto n_train = train_count(samples.size(), ratio);
    DatasetSplit split;
    split.ratio = ratio;
    split.test.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                      std::make_move_iterator(samples.end()));
    samples.resize(n_train);
    split.train = std::move(samples);
    return split;
}

struct DatasetConfig {
    LabelSpec labels;
    std::size_t window = kDefaultWindow;
    double ratio = 0.95;
};

struct BuiltDataset {
    FeatureFrame frame; // unscaled
    ScalingStats stats;
    DatasetSplit split;
};

/// Whole chain from a clean series. Scaling divisors come from the frame rows
/// up to the newest training anchor, so test rows never influence them.
inline BuiltDataset build_dataset(const CandleSeries& series, const DatasetConfig& cfg) {
    auto frame = augment_frame(series);
    auto bar_labels = make_labels(series, cfg.labels);
    auto row_labels = align_labels(frame, bar_labels);

    auto unscaled = window_samples(frame, row_labels, cfg.window);
    if (unscaled.size() < 2) throw Error(Errc::TooFewSamples, "series too short for the window");
    const auto n_train = train_count(unscaled.size(), cfg.ratio);
    if (n_train == 0) throw Error(Errc::TooFewSamples, "split leaves no training samples");
    const auto last_train_anchor = unscaled[n_train - 1].anchor_ts;
    const auto& ts = frame.timestamps();
    const auto stats_rows =
        static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), last_train_anchor) - ts.begin());
    unscaled.clear();

    auto scaled = scale_frame(frame, stats_rows);
    auto samples = window_samples(scaled.frame, row_labels, cfg.window);
    return {std::move(frame), std::move(scaled.stats), split_dataset(std::move(samples), cfg.ratio)};
}

} // namespace cryptodir
