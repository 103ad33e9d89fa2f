#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cryptodir/dataset.hpp"
#include "cryptodir/error.hpp"

namespace cryptodir {

/// Dense row-major feature matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw Error(Errc::DimensionMismatch, "matrix data size");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LabeledData {
    Matrix x;
    std::vector<int> y;

    std::size_t size() const noexcept { return y.size(); }
};

inline LabeledData to_labeled(std::span<const Sample> samples) {
    if (samples.empty()) throw Error(Errc::EmptyTrain, "no training samples");
    const auto d = samples.front().features.size();
    std::vector<double> data;
    data.reserve(samples.size() * d);
    LabeledData out;
    out.y.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.features.size() != d) throw Error(Errc::DimensionMismatch, "ragged sample features");
        if (s.label != 0 && s.label != 1) throw Error(Errc::BadConfig, "labels must be 0 or 1");
        data.insert(data.end(), s.features.begin(), s.features.end());
        out.y.push_back(s.label);
    }
    out.x = Matrix(samples.size(), d, std::move(data));
    return out;
}

struct Prediction {
    int label = 0;
    double score = 0.0; // vote share / mean vote / probability of class 1
};

struct Hyperparams {
    int knn_k = 5;
    double knn_minkowski_p = 2.0;
    int knn_leaf_size = 30;
    int rf_trees = 700;
    int rf_min_split = 2;
    std::optional<int> rf_max_depth; // empty: grow until pure or below min_split
    std::optional<int> rf_max_features; // empty: floor(sqrt(d))
    bool rf_bootstrap = true;
    double gbt_eta = 0.3;
    int gbt_max_depth = 6;
    double gbt_lambda = 1.0;
    double gbt_alpha = 0.0;
    double gbt_gamma = 0.0;
    int gbt_rounds = 100;
    std::uint64_t seed = 0;

    /// Per-market neighbour and tree counts used for the three studied pairs.
    static Hyperparams for_symbol(std::string_view symbol) {
        Hyperparams hp;
        if (symbol == "LTCBTC") {
            hp.knn_k = 20;
            hp.rf_trees = 1000;
        } else if (symbol == "ZECBTC") {
            hp.knn_k = 100;
            hp.rf_trees = 700;
        }
        return hp;
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(Errc::BadConfig, m); };
        if (knn_k < 1) fail("knn_k must be >= 1");
        if (!(knn_minkowski_p >= 1.0)) fail("knn_minkowski_p must be >= 1");
        if (knn_leaf_size < 1) fail("knn_leaf_size must be >= 1");
        if (rf_trees < 1) fail("rf_trees must be >= 1");
        if (rf_min_split < 2) fail("rf_min_split must be >= 2");
        if (rf_max_depth && *rf_max_depth < 1) fail("rf_max_depth must be >= 1");
        if (rf_max_features && *rf_max_features < 1) fail("rf_max_features must be >= 1");
        if (!(gbt_eta > 0.0 && gbt_eta <= 1.0)) fail("gbt_eta must be in (0,1]");
        if (gbt_max_depth < 1) fail("gbt_max_depth must be >= 1");
        if (!(gbt_lambda >= 0.0) || !(gbt_alpha >= 0.0) || !(gbt_gamma >= 0.0))
            fail("gbt_lambda, gbt_alpha and gbt_gamma must be >= 0");
        if (gbt_rounds < 0) fail("gbt_rounds must be >= 0");
    }
};

inline void check_dimension(std::span<const double> x, std::size_t expected) {
    if (x.size() != expected)
        throw Error(Errc::DimensionMismatch,
                    "expected " + std::to_string(expected) + " features, got " + std::to_string(x.size()));
}

inline double accuracy(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw Error(Errc::LengthMismatch, "pred/truth lengths differ");
    if (pred.empty()) throw Error(Errc::Empty, "accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace cryptodir
