#pragma once

// Bagged gini trees with per-node random feature subsets.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "cryptodir/classifiers/cart.hpp"
#include "cryptodir/classifiers/common.hpp"

namespace cryptodir {

struct ForestModel {
    std::vector<Tree> trees;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Generator for tree `b`; independent of how trees are scheduled across threads.
inline std::mt19937_64 forest_tree_rng(std::uint64_t seed, std::size_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(std::uint64_t{b} >> 32)};
    return std::mt19937_64(seq);
}

/// N draws with replacement from [0, n), returned sorted.
inline std::vector<std::uint32_t> bootstrap_rows(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    std::vector<std::uint32_t> rows(n);
    for (auto& r : rows) r = pick(rng);
    std::sort(rows.begin(), rows.end());
    return rows;
}

inline std::size_t forest_feature_subset(const Hyperparams& hp, std::size_t d) {
    if (hp.rf_max_features) return std::min<std::size_t>(static_cast<std::size_t>(*hp.rf_max_features), d);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
}

inline ForestModel rf_fit(const LabeledData& train, const Hyperparams& hp, unsigned threads = 0) {
    hp.validate();
    if (train.size() == 0) throw Error(Errc::EmptyTrain, "forest needs training data");
    const auto d = train.x.cols();
    TreeParams params;
    params.max_depth = hp.rf_max_depth;
    params.min_split = hp.rf_min_split;
    params.feature_subset = forest_feature_subset(hp, d);

    ForestModel model;
    model.seed = hp.seed;
    model.n_features = d;
    model.trees.resize(static_cast<std::size_t>(hp.rf_trees));

    auto fit_one = [&](std::size_t b) {
        auto rng = forest_tree_rng(hp.seed, b);
        auto rows = hp.rf_bootstrap ? bootstrap_rows(train.size(), rng) : identity_slots(train.size());
        std::vector<int> labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train.y[rows[i]];
        GiniCriterion crit{labels};
        model.trees[b] = grow_tree(train.x, rows, crit, params, rng);
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(model.trees.size()));
    if (threads <= 1) {
        for (std::size_t b = 0; b < model.trees.size(); ++b) fit_one(b);
        return model;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t b = next++; b < model.trees.size(); b = next++) fit_one(b);
        });
    pool.clear();
    return model;
}

inline ForestModel rf_fit(std::span<const Sample> train, const Hyperparams& hp, unsigned threads = 0) {
    if (train.empty()) throw Error(Errc::EmptyTrain, "forest needs training data");
    return rf_fit(to_labeled(train), hp, threads);
}

/// Majority of per-tree votes (ties -> 0); score is the mean vote.
inline Prediction rf_predict(const ForestModel& m, std::span<const double> x) {
    check_dimension(x, m.n_features);
    std::size_t ones = 0;
    for (const auto& t : m.trees) ones += static_cast<std::size_t>(tree_vote(t, x));
    const auto b = m.trees.size();
    return {2 * ones > b ? 1 : 0, static_cast<double>(ones) / static_cast<double>(b)};
}

} // namespace cryptodir
