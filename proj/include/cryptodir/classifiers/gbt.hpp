#pragma once

// Gradient-boosted trees for binary labels, logistic loss with Newton leaves.
//
// score(x) = base_score + eta * sum_m w_m(x), probability = logistic(score).
// Each round fits a regression tree to g = p - y and h = p(1 - p).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cryptodir/classifiers/cart.hpp"
#include "cryptodir/classifiers/common.hpp"

namespace cryptodir {

struct GbtModel {
    double base_score = 0.0; // log(pos/neg)
    double eta = 0.3;
    std::vector<Tree> trees;
    std::size_t n_features = 0;

    double score(std::span<const double> x) const {
        double sum = 0.0;
        for (const auto& t : trees) sum += t.value(x);
        return base_score + eta * sum;
    }

    friend bool operator==(const GbtModel&, const GbtModel&) = default;
};

/// Mean negative log-likelihood of labels under scores.
inline double log_loss(std::span<const double> scores, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        // log(1 + e^z) - y z, written to avoid overflow
        double z = scores[i];
        double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += softplus - y[i] * z;
    }
    return total / static_cast<double>(y.size());
}

/// d/dF and d2/dF2 of the log-loss at score F for label y.
inline std::pair<double, double> logistic_grad_hess(double score, int y) {
    double p = logistic(score);
    return {p - y, p * (1.0 - p)};
}

/// Squared-error residual y - F, the negative gradient of 0.5 (y - F)^2.
inline double squared_error_residual(double y, double f) { return y - f; }

inline GbtModel gbt_fit(const LabeledData& train, const Hyperparams& hp, std::vector<double>* loss_trace = nullptr) {
    hp.validate();
    const auto n = train.size();
    if (n == 0) throw Error(Errc::EmptyTrain, "boosting needs training data");
    std::size_t pos = 0;
    for (int v : train.y) pos += static_cast<std::size_t>(v);
    if (pos == 0 || pos == n) throw Error(Errc::SingleClass, "boosting needs both classes present");

    GbtModel model;
    model.base_score = std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
    model.eta = hp.gbt_eta;
    model.n_features = train.x.cols();

    TreeParams params;
    params.max_depth = hp.gbt_max_depth;
    params.min_split = 2;
    params.search = SplitSearch::Presorted;

    const auto slots = identity_slots(n);
    const auto presorted = detail::presort_slots(train.x, slots);
    std::vector<double> scores(n, model.base_score), grad(n), hess(n);
    std::mt19937_64 rng(hp.seed); // unused with all features as candidates
    if (loss_trace) loss_trace->assign(1, log_loss(scores, train.y));

    for (int round = 0; round < hp.gbt_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) std::tie(grad[i], hess[i]) = logistic_grad_hess(scores[i], train.y[i]);
        NewtonCriterion crit{grad, hess, hp.gbt_lambda, hp.gbt_alpha, hp.gbt_gamma};
        auto tree = grow_tree(train.x, slots, crit, params, rng, &presorted);
        for (std::size_t i = 0; i < n; ++i) scores[i] += model.eta * tree.value(train.x.row(i));
        model.trees.push_back(std::move(tree));
        if (loss_trace) loss_trace->push_back(log_loss(scores, train.y));
    }
    return model;
}

inline GbtModel gbt_fit(std::span<const Sample> train, const Hyperparams& hp, std::vector<double>* loss_trace = nullptr) {
    if (train.empty()) throw Error(Errc::EmptyTrain, "boosting needs training data");
    return gbt_fit(to_labeled(train), hp, loss_trace);
}

/// Label 1 only when the probability strictly exceeds 1/2.
inline Prediction gbt_predict(const GbtModel& m, std::span<const double> x) {
    check_dimension(x, m.n_features);
    double p = logistic(m.score(x));
    return {p > 0.5 ? 1 : 0, p};
}

} // namespace cryptodir
