#pragma once

// Shared generators for the test suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cryptodir/dataset.hpp"
#include "cryptodir/market_data.hpp"

namespace testsupport {

inline constexpr std::int64_t kFourHours = 14400;
inline constexpr std::int64_t kStartTs = 1500000000 - 1500000000 % kFourHours;

/// Valid gap-free 4h candles following a geometric random walk.
inline cryptodir::CandleSeries random_series(std::size_t n, std::uint64_t seed, double start = 100.0,
                                             double vol = 0.01) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, vol);
    std::uniform_real_distribution<double> wick(0.0, vol);
    std::uniform_real_distribution<double> qty(1.0, 100.0);
    cryptodir::CandleSeries s{"TESTUSDT", kFourHours, {}};
    double prev = start;
    for (std::size_t i = 0; i < n; ++i) {
        double open = prev;
        double close = open * std::exp(step(rng));
        double high = std::max(open, close) * (1.0 + wick(rng));
        double low = std::min(open, close) * (1.0 - wick(rng));
        s.candles.push_back({kStartTs + static_cast<std::int64_t>(i) * kFourHours, open, high, low, close, qty(rng)});
        prev = close;
    }
    return s;
}

inline cryptodir::CandleSeries constant_series(std::size_t n, double price = 50.0) {
    cryptodir::CandleSeries s{"FLAT", kFourHours, {}};
    for (std::size_t i = 0; i < n; ++i)
        s.candles.push_back({kStartTs + static_cast<std::int64_t>(i) * kFourHours, price, price, price, price, 10.0});
    return s;
}

inline cryptodir::CandleSeries scaled(cryptodir::CandleSeries s, double c) {
    for (auto& k : s.candles) {
        k.open *= c;
        k.high *= c;
        k.low *= c;
        k.close *= c;
    }
    return s;
}

/// Bars whose closes follow a persistent latent drift, so short-horizon
/// direction is partly predictable from recent momentum.
inline cryptodir::CandleSeries autoregressive_series(std::size_t n, std::uint64_t seed, double persistence = 0.9,
                                                     double drift_vol = 0.004, double noise_vol = 0.004) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> wick(0.0, 0.002);
    std::uniform_real_distribution<double> qty(10.0, 20.0);
    cryptodir::CandleSeries s{"ARSIM", kFourHours, {}};
    double prev = 1000.0, drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        drift = persistence * drift + drift_vol * z(rng);
        double r = drift + noise_vol * z(rng);
        double open = prev;
        double close = open * std::exp(r);
        double high = std::max(open, close) * (1.0 + wick(rng));
        double low = std::min(open, close) * (1.0 - wick(rng));
        s.candles.push_back({kStartTs + static_cast<std::int64_t>(i) * kFourHours, open, high, low, close, qty(rng)});
        prev = close;
    }
    return s;
}

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -5.0, double hi = 5.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

} // namespace testsupport
