#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <map>
#include <set>
#include <vector>

#include "cryptodir/model_io.hpp"
#include "support.hpp"

using namespace cryptodir;

namespace {

LabeledData random_labeled(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    LabeledData out{Matrix(n, d), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.x(i, j) = z(rng);
        out.y[i] = coin(rng) ? 1 : 0;
    }
    return out;
}

/// Label is the sign of a fixed linear form, pushed away from the boundary.
LabeledData separable_data(std::size_t n, std::size_t d, std::uint64_t seed) {
    auto data = random_labeled(n, d, seed);
    for (std::size_t i = 0; i < n; ++i) {
        double s = data.x(i, 0) + 0.5 * data.x(i, 1);
        data.y[i] = s > 0 ? 1 : 0;
        data.x(i, 0) += data.y[i] ? 0.25 : -0.25;
    }
    return data;
}

std::vector<double> probe(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.2);
    std::vector<double> x(d);
    for (auto& v : x) v = z(rng);
    return x;
}

Hyperparams small_hp() {
    Hyperparams hp;
    hp.rf_trees = 15;
    hp.gbt_rounds = 20;
    hp.seed = 7;
    return hp;
}

/// Sorts every training row by Euclidean distance and re-votes with 1/d weights.
int brute_force_vote(const LabeledData& data, std::span<const double> x, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) ss += (data.x(i, j) - x[j]) * (data.x(i, j) - x[j]);
        dist.emplace_back(std::sqrt(ss), i);
    }
    std::sort(dist.begin(), dist.end());
    double w0 = 0, w1 = 0;
    for (std::size_t r = 0; r < k; ++r) (data.y[dist[r].second] ? w1 : w0) += 1.0 / dist[r].first;
    return w1 > w0 ? 1 : 0;
}

double gini(double ones, double n) {
    if (n == 0) return 0.0;
    double p = ones / n;
    return 2.0 * p * (1.0 - p);
}

/// Sample-weighted gini over the leaves the training rows land in.
double tree_training_impurity(const Tree& t, const LabeledData& data) {
    std::map<const TreeNode*, std::pair<double, double>> leaves;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto& [n, ones] = leaves[&t.leaf_for(data.x.row(i))];
        n += 1;
        ones += data.y[i];
    }
    double total = 0.0;
    for (auto& [leaf, c] : leaves) total += c.first / static_cast<double>(data.size()) * gini(c.second, c.first);
    return total;
}

/// Best weighted gini over every (feature, midpoint) split of the root.
double best_single_split_impurity(const LabeledData& data) {
    double best = INFINITY;
    const double n = static_cast<double>(data.size());
    for (std::size_t f = 0; f < data.x.cols(); ++f) {
        std::set<double> values;
        for (std::size_t i = 0; i < data.size(); ++i) values.insert(data.x(i, f));
        for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
            double thr = (*it + *std::next(it)) / 2.0;
            double nl = 0, ol = 0, nr = 0, orr = 0;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (data.x(i, f) <= thr) {
                    nl += 1;
                    ol += data.y[i];
                } else {
                    nr += 1;
                    orr += data.y[i];
                }
            best = std::min(best, nl / n * gini(ol, nl) + nr / n * gini(orr, nr));
        }
    }
    return best;
}

double scalar_log_loss(double f, int y) {
    std::vector<double> s{f};
    std::vector<int> t{y};
    return log_loss(s, t);
}

} // namespace

// ---- accuracy ----

TEST(Accuracy, Examples) {
    std::vector<int> a{1, 0, 1, 1}, c{0, 1, 0, 0};
    EXPECT_EQ(accuracy(a, a), 1.0);
    EXPECT_EQ(accuracy(a, c), 0.0);
    EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 0}), 2.0 / 3.0);
    try {
        accuracy(std::vector<int>{1}, std::vector<int>{1, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::LengthMismatch);
    }
    try {
        accuracy(std::vector<int>{}, std::vector<int>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Empty);
    }
}

TEST(Hyperparams, DefaultsAndValidation) {
    Hyperparams hp;
    EXPECT_EQ(hp.knn_k, 5);
    EXPECT_EQ(hp.rf_trees, 700);
    EXPECT_EQ(hp.gbt_max_depth, 6);
    EXPECT_DOUBLE_EQ(hp.gbt_eta, 0.3);
    EXPECT_EQ(Hyperparams::for_symbol("LTCBTC").knn_k, 20);
    EXPECT_EQ(Hyperparams::for_symbol("LTCBTC").rf_trees, 1000);
    EXPECT_EQ(Hyperparams::for_symbol("ZECBTC").knn_k, 100);
    hp.gbt_eta = 1.5;
    EXPECT_THROW(hp.validate(), Error);
    hp = {};
    hp.gbt_lambda = -1;
    EXPECT_THROW(hp.validate(), Error);
}

// ---- kNN ----

TEST(Knn, ZeroDistanceWins) {
    auto data = random_labeled(10, 3, 1);
    Hyperparams hp;
    hp.knn_k = 1;
    auto m = knn_fit(data, hp);
    EXPECT_EQ(m.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(knn_predict(m, data.x.row(i)).label, data.y[i]);

    // duplicates at distance zero with split labels: tie -> 0
    LabeledData dup{Matrix(3, 1, {1.0, 1.0, 5.0}), {1, 0, 1}};
    hp.knn_k = 3;
    EXPECT_EQ(knn_predict(knn_fit(dup, hp), std::vector<double>{1.0}).label, 0);
}

TEST(Knn, OneDimensionalNearest) {
    LabeledData data{Matrix(2, 1, {0.0, 10.0}), {0, 1}};
    Hyperparams hp;
    hp.knn_k = 1;
    auto m = knn_fit(data, hp);
    EXPECT_EQ(knn_predict(m, std::vector<double>{1.0}).label, 0);
    EXPECT_EQ(knn_predict(m, std::vector<double>{9.0}).label, 1);
    EXPECT_THROW(knn_predict(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Knn, Errors) {
    auto data = random_labeled(4, 2, 2);
    Hyperparams hp;
    hp.knn_k = 5;
    try {
        knn_fit(data, hp);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::KTooLarge);
    }
    try {
        knn_fit(std::span<const Sample>{}, hp);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyTrain);
    }
}

TEST(Knn, MatchesBruteForceVoteOracle) {
    auto data = random_labeled(30, 4, 3);
    Hyperparams hp;
    hp.knn_k = 5;
    auto m = knn_fit(data, hp);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        auto x = probe(4, rng);
        EXPECT_EQ(knn_predict(m, x).label, brute_force_vote(data, x, 5));
    }
}

TEST(Knn, IndexAgreesWithBruteForce) {
    for (std::size_t d : {2u, 5u, 12u}) {
        auto data = random_labeled(300, d, 10 + d);
        Hyperparams hp;
        hp.knn_k = 7;
        hp.knn_leaf_size = 4;
        auto kd = knn_fit(data, hp, NeighborSearch::KdTree);
        auto bf = knn_fit(data, hp, NeighborSearch::BruteForce);
        ASSERT_EQ(kd.resolved_search(), NeighborSearch::KdTree);
        std::mt19937_64 rng(d);
        for (int i = 0; i < 200; ++i) {
            auto x = probe(d, rng);
            auto a = knn_neighbors(kd, x);
            auto b = knn_neighbors(bf, x);
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t r = 0; r < a.size(); ++r) {
                EXPECT_EQ(a[r].index, b[r].index);
                EXPECT_EQ(a[r].power, b[r].power);
            }
            EXPECT_EQ(knn_predict(kd, x).label, knn_predict(bf, x).label);
        }
    }
}

TEST(Knn, PermutationInvariant) {
    auto data = random_labeled(60, 3, 5);
    std::vector<std::size_t> order(60);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(6));
    LabeledData perm{Matrix(60, 3), std::vector<int>(60)};
    for (std::size_t i = 0; i < 60; ++i) {
        for (std::size_t j = 0; j < 3; ++j) perm.x(i, j) = data.x(order[i], j);
        perm.y[i] = data.y[order[i]];
    }
    Hyperparams hp;
    hp.knn_k = 9;
    auto a = knn_fit(data, hp);
    auto b = knn_fit(perm, hp);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        auto x = probe(3, rng);
        EXPECT_EQ(knn_predict(a, x).label, knn_predict(b, x).label);
        EXPECT_DOUBLE_EQ(knn_predict(a, x).score, knn_predict(b, x).score);
    }
}

TEST(Knn, WholeSetIsGlobalWeightedVote) {
    auto data = random_labeled(25, 2, 8);
    Hyperparams hp;
    hp.knn_k = 25;
    auto m = knn_fit(data, hp);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 30; ++i) {
        auto x = probe(2, rng);
        EXPECT_EQ(knn_predict(m, x).label, brute_force_vote(data, x, 25));
    }
}

// ---- CART ----

TEST(Cart, SingleClassIsOneLeaf) {
    auto data = random_labeled(20, 3, 11);
    std::fill(data.y.begin(), data.y.end(), 1);
    std::mt19937_64 rng(0);
    auto t = cart_fit(data, {}, rng);
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_TRUE(t.nodes[0].is_leaf());
    EXPECT_EQ(t.nodes[0].value, 1.0);
}

TEST(Cart, SeparableRootSplit) {
    LabeledData data{Matrix(6, 1, {-3, -2, -1, 1, 2, 3}), {0, 0, 0, 1, 1, 1}};
    std::mt19937_64 rng(0);
    auto t = cart_fit(data, {}, rng);
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 0.0);
    EXPECT_EQ(t.value(std::vector<double>{-0.5}), 0.0);
    EXPECT_EQ(t.value(std::vector<double>{0.5}), 1.0);
}

TEST(Cart, BeatsEveryRootSplitAlternative) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto data = random_labeled(40, 3, 100 + seed);
        TreeParams params;
        params.max_depth = 3;
        std::mt19937_64 rng(seed);
        auto t = cart_fit(data, params, rng);
        EXPECT_LE(t.depth(), 3u);
        EXPECT_LE(tree_training_impurity(t, data), best_single_split_impurity(data) + 1e-12) << seed;
    }
}

TEST(Cart, GrowsToPurityWithoutDepthLimit) {
    auto data = random_labeled(80, 4, 12);
    std::mt19937_64 rng(0);
    auto t = cart_fit(data, {}, rng);
    EXPECT_EQ(tree_training_impurity(t, data), 0.0);
}

TEST(Cart, SearchStrategiesBuildIdenticalTrees) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto data = random_labeled(120, 6, 200 + seed);
        for (std::size_t subset : {0u, 2u}) {
            TreeParams a, b;
            a.search = SplitSearch::PerNodeSort;
            b.search = SplitSearch::Presorted;
            a.feature_subset = b.feature_subset = subset;
            std::mt19937_64 r1(seed), r2(seed);
            EXPECT_EQ(cart_fit(data, a, r1), cart_fit(data, b, r2));
        }
    }
}

TEST(Cart, RegressionTreeFitsStepTargets) {
    Matrix x(4, 1, {0, 1, 2, 3});
    std::vector<double> y{1, 1, 5, 5};
    std::mt19937_64 rng(0);
    auto t = cart_fit_regression(x, y, {}, rng);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 1.5);
    EXPECT_DOUBLE_EQ(t.value(std::vector<double>{0.2}), 1.0);
    EXPECT_DOUBLE_EQ(t.value(std::vector<double>{2.7}), 5.0);
}

// ---- random forest ----

TEST(Forest, SingleTreeWithoutBootstrapIsCart) {
    auto data = random_labeled(100, 9, 13);
    Hyperparams hp;
    hp.rf_trees = 1;
    hp.rf_bootstrap = false;
    hp.seed = 42;
    auto forest = rf_fit(data, hp, 1);
    TreeParams params;
    params.feature_subset = forest_feature_subset(hp, 9);
    EXPECT_EQ(params.feature_subset, 3u);
    auto rng = forest_tree_rng(42, 0);
    auto tree = cart_fit(data, params, rng);
    EXPECT_EQ(forest.trees[0], tree);
    std::mt19937_64 prng(1);
    for (int i = 0; i < 100; ++i) {
        auto x = probe(9, prng);
        EXPECT_EQ(rf_predict(forest, x).label, tree_vote(tree, x));
    }
}

TEST(Forest, SameSeedIsBitIdentical) {
    auto data = random_labeled(150, 16, 14);
    auto hp = small_hp();
    auto a = rf_fit(data, hp, 1);
    auto b = rf_fit(data, hp, 3); // thread count must not matter
    EXPECT_EQ(a, b);
    hp.seed = 8;
    EXPECT_NE(a, rf_fit(data, hp, 1));
}

TEST(Forest, BootstrapKeepsAboutSixtyThreePercent) {
    const std::size_t n = 500;
    double total = 0.0;
    for (std::size_t b = 0; b < 1000; ++b) {
        auto rng = forest_tree_rng(3, b);
        auto rows = bootstrap_rows(n, rng);
        EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
        total += static_cast<double>(std::set<std::uint32_t>(rows.begin(), rows.end()).size()) / n;
    }
    EXPECT_NEAR(total / 1000.0, 1.0 - std::exp(-1.0), 0.01);
}

TEST(Forest, VoteCounting) {
    auto leaf = [](double v) {
        Tree t;
        t.nodes.push_back({-1, 0, -1, -1, v, 1});
        return t;
    };
    ForestModel m{{leaf(1), leaf(1), leaf(0)}, 0, 1};
    auto p = rf_predict(m, std::vector<double>{0.0});
    EXPECT_EQ(p.label, 1);
    EXPECT_DOUBLE_EQ(p.score, 2.0 / 3.0);

    ForestModel even{{leaf(1), leaf(0)}, 0, 1};
    EXPECT_EQ(rf_predict(even, std::vector<double>{0.0}).label, 0);

    ForestModel unanimous{{leaf(1), leaf(1), leaf(1)}, 0, 1};
    EXPECT_EQ(rf_predict(unanimous, std::vector<double>{0.0}).score, 1.0);
}

TEST(Forest, StumpsMatchHandTally) {
    auto data = random_labeled(30, 4, 15);
    Hyperparams hp;
    hp.rf_trees = 3;
    hp.rf_max_depth = 1;
    auto m = rf_fit(data, hp, 1);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        auto x = probe(4, rng);
        int ones = 0;
        for (const auto& t : m.trees) {
            ASSERT_LE(t.depth(), 1u);
            const auto& root = t.nodes[0];
            const auto& leaf = root.is_leaf() ? root
                               : x[static_cast<std::size_t>(root.feature)] <= root.threshold
                                   ? t.nodes[static_cast<std::size_t>(root.left)]
                                   : t.nodes[static_cast<std::size_t>(root.right)];
            ones += leaf.value > 0.5 ? 1 : 0;
        }
        EXPECT_EQ(rf_predict(m, x).label, ones >= 2 ? 1 : 0);
    }
}

TEST(Forest, AgreeingTreeNeverFlipsMajority) {
    auto data = random_labeled(60, 4, 16);
    auto hp = small_hp();
    hp.rf_trees = 9;
    auto m = rf_fit(data, hp, 1);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        auto x = probe(4, rng);
        auto before = rf_predict(m, x).label;
        auto grown = m;
        Tree agree;
        TreeNode leaf;
        leaf.value = before;
        agree.nodes.push_back(leaf);
        grown.trees.push_back(agree);
        EXPECT_EQ(rf_predict(grown, x).label, before);
    }
}

// ---- gradient boosting ----

TEST(Gbt, BalancedLabelsGiveZeroBase) {
    auto data = random_labeled(40, 2, 17);
    for (std::size_t i = 0; i < 40; ++i) data.y[i] = static_cast<int>(i % 2);
    auto hp = small_hp();
    hp.gbt_rounds = 0;
    auto m = gbt_fit(data, hp);
    EXPECT_EQ(m.base_score, 0.0);
    EXPECT_TRUE(m.trees.empty());
    // zero rounds and score 0: probability 1/2 and the strict rule gives label 0
    auto p = gbt_predict(m, std::vector<double>{3.0, -1.0});
    EXPECT_EQ(p.score, 0.5);
    EXPECT_EQ(p.label, 0);
}

TEST(Gbt, ZeroRoundsIsConstant) {
    auto data = random_labeled(50, 3, 18);
    data.y.assign(50, 0);
    for (int i = 0; i < 15; ++i) data.y[static_cast<std::size_t>(i)] = 1;
    auto hp = small_hp();
    hp.gbt_rounds = 0;
    auto m = gbt_fit(data, hp);
    const double expected = logistic(std::log(15.0 / 35.0));
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(gbt_predict(m, probe(3, rng)).score, expected);
}

TEST(Gbt, SquaredErrorResidual) { EXPECT_EQ(squared_error_residual(3.0, 1.0), 2.0); }

TEST(Gbt, GradientHessianMatchFiniteDifferences) {
    auto [g, h] = logistic_grad_hess(0.0, 1);
    EXPECT_EQ(g, -0.5);
    EXPECT_EQ(h, 0.25);
    const double e = 1e-5;
    EXPECT_NEAR((scalar_log_loss(e, 1) - scalar_log_loss(-e, 1)) / (2 * e), -0.5, 1e-6);

    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> f(-6.0, 6.0);
    for (int i = 0; i < 500; ++i) {
        const double F = f(rng);
        const int y = i % 2;
        auto [ag, ah] = logistic_grad_hess(F, y);
        const double fg = (scalar_log_loss(F + e, y) - scalar_log_loss(F - e, y)) / (2 * e);
        const double eh = 1e-4;
        const double fh =
            (scalar_log_loss(F + eh, y) - 2 * scalar_log_loss(F, y) + scalar_log_loss(F - eh, y)) / (eh * eh);
        EXPECT_NEAR(ag, fg, 1e-5);
        EXPECT_NEAR(ah, fh, 1e-5);
    }
}

TEST(Gbt, TrainingLossNeverIncreases) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto data = random_labeled(200, 8, 300 + seed);
        auto hp = small_hp();
        hp.gbt_rounds = 50;
        hp.gbt_eta = seed % 2 ? 1.0 : 0.3;
        std::vector<double> trace;
        auto m = gbt_fit(data, hp, &trace);
        ASSERT_EQ(trace.size(), 51u);
        ASSERT_EQ(m.trees.size(), 50u);
        for (std::size_t r = 1; r < trace.size(); ++r) EXPECT_LE(trace[r], trace[r - 1] + 1e-12) << seed << "@" << r;
        for (const auto& t : m.trees) EXPECT_LE(t.depth(), 6u);
    }
}

TEST(Gbt, OneRoundToyTree) {
    LabeledData data{Matrix(4, 1, {-2, -1, 1, 2}), {0, 0, 1, 1}};
    auto hp = small_hp();
    hp.gbt_rounds = 1;
    auto m = gbt_fit(data, hp);
    ASSERT_EQ(m.trees.size(), 1u);
    const auto& t = m.trees[0];
    // g = +-1/2, h = 1/4 per sample: root split at 0, leaves -G/(H+1) = -+1/1.5
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 0.0);
    EXPECT_NEAR(t.value(std::vector<double>{-1.5}), -2.0 / 3.0, 1e-12);
    EXPECT_NEAR(t.value(std::vector<double>{1.5}), 2.0 / 3.0, 1e-12);
    EXPECT_EQ(gbt_predict(m, std::vector<double>{-0.5}).label, 0);
    EXPECT_EQ(gbt_predict(m, std::vector<double>{0.5}).label, 1);
}

TEST(Gbt, GammaAndAlphaShrink) {
    LabeledData data{Matrix(4, 1, {-2, -1, 1, 2}), {0, 0, 1, 1}};
    auto hp = small_hp();
    hp.gbt_rounds = 1;
    hp.gbt_gamma = 10.0; // larger than any achievable gain
    EXPECT_EQ(gbt_fit(data, hp).trees[0].nodes.size(), 1u);
    hp.gbt_gamma = 0.0;
    hp.gbt_alpha = 0.5; // |G| = 1 per side -> soft-thresholded to 0.5
    EXPECT_NEAR(gbt_fit(data, hp).trees[0].value(std::vector<double>{2.0}), 0.5 / 1.5, 1e-12);
}

TEST(Gbt, Errors) {
    auto data = random_labeled(10, 2, 20);
    data.y.assign(10, 1);
    try {
        gbt_fit(data, small_hp());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SingleClass);
    }
    try {
        gbt_fit(std::span<const Sample>{}, small_hp());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyTrain);
    }
}

// ---- shared contract ----

TEST(AllModels, LearnSeparableData) {
    auto data = separable_data(200, 5, 21);
    auto hp = small_hp();
    for (auto kind : {ModelKind::Knn, ModelKind::Forest, ModelKind::Gbt}) {
        auto m = fit_model(kind, data, hp);
        std::vector<int> pred;
        for (std::size_t i = 0; i < data.size(); ++i) pred.push_back(m.predict(data.x.row(i)).label);
        EXPECT_GE(accuracy(pred, data.y), 0.95) << model_kind_name(kind);
    }
}

TEST(AllModels, SerializationRoundTrip) {
    auto data = random_labeled(120, 6, 22);
    auto hp = small_hp();
    for (auto kind : {ModelKind::Knn, ModelKind::Forest, ModelKind::Gbt}) {
        ModelFile file{fit_model(kind, data, hp), hp, "0123456789abcdef", ScalingStats{std::vector<double>(19, 2.0)}, 60};
        auto text = model_to_json(file).dump();
        auto back = model_from_json(nlohmann::json::parse(text));
        EXPECT_EQ(back.model.kind(), kind);
        EXPECT_EQ(back.pipeline_hash, file.pipeline_hash);
        EXPECT_EQ(back.scaling, file.scaling);
        EXPECT_EQ(model_to_json(back).dump(), text);
        std::mt19937_64 rng(5);
        for (int i = 0; i < 100; ++i) {
            auto x = probe(6, rng);
            auto a = file.model.predict(x), b = back.model.predict(x);
            EXPECT_EQ(a.label, b.label);
            EXPECT_EQ(a.score, b.score);
        }
    }
}

TEST(AllModels, RejectBadModelFiles) {
    auto data = random_labeled(30, 2, 23);
    ModelFile file{fit_model(ModelKind::Gbt, data, small_hp()), small_hp(), "h", ScalingStats{std::vector<double>(19, 1.0)}, 60};
    auto j = nlohmann::json::parse(model_to_json(file).dump());
    auto bad_version = j;
    bad_version["version"] = 99;
    EXPECT_THROW(model_from_json(bad_version), Error);
    auto bad_tree = j;
    bad_tree["payload"]["trees"][0]["left"][0] = 1000;
    EXPECT_THROW(model_from_json(bad_tree), Error);
    auto bad_kind = j;
    bad_kind["kind"] = "svm";
    EXPECT_THROW(model_from_json(bad_kind), Error);
}

TEST(AllModels, FitOnSamplesMatchesFitOnMatrix) {
    auto built = build_dataset(testsupport::random_series(160, 24), {});
    auto hp = small_hp();
    hp.knn_k = 3;
    auto a = knn_fit(std::span<const Sample>(built.split.train), hp);
    auto b = knn_fit(to_labeled(built.split.train), hp);
    for (const auto& s : built.split.test) EXPECT_EQ(knn_predict(a, s.features).label, knn_predict(b, s.features).label);
    EXPECT_EQ(a.dimension(), 1140u);
}
