#pragma once

// Greedy CART growth shared by the forest and the boosted trees.
//
// A tree is grown over "slots": positions in a training multiset, each mapped
// to a matrix row (bootstrap resamples repeat rows). Split search is exact:
// candidate thresholds are midpoints between adjacent distinct values, the
// best gain wins, and ties go to the lowest feature, then the lowest threshold.
//
// Two search strategies produce identical trees. PerNodeSort sorts the node's
// slots for every candidate feature; Presorted sorts every feature once and
// stably partitions those orders as nodes split, which is cheaper when every
// feature is a candidate (boosting).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cryptodir/classifiers/common.hpp"

namespace cryptodir {

struct TreeNode {
    int feature = -1; // -1: leaf
    double threshold = 0.0;
    int left = -1;  // x[feature] <= threshold
    int right = -1; // x[feature] >  threshold
    double value = 0.0;
    double weight = 0.0; // slots reaching the node

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary tree stored as a node array, root at index 0 (pre-order).
struct Tree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> x) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i];
    }
    double value(std::span<const double> x) const { return leaf_for(x).value; }

    std::size_t depth() const { return nodes.empty() ? 0 : depth_from(0); }
    std::size_t leaves() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
    }

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    std::size_t depth_from(std::size_t i) const {
        const auto& n = nodes[i];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }
};

/// Gini impurity over binary labels. Leaf value: share of class 1.
struct GiniCriterion {
    std::span<const int> labels; // per slot

    struct Stats {
        double n0 = 0, n1 = 0;
    };
    Stats empty() const { return {}; }
    void add(Stats& s, std::uint32_t slot) const { (labels[slot] ? s.n1 : s.n0) += 1.0; }
    Stats minus(const Stats& a, const Stats& b) const { return {a.n0 - b.n0, a.n1 - b.n1}; }
    double weight(const Stats& s) const { return s.n0 + s.n1; }
    /// Weighted impurity decrease n*G(parent) - nL*G(L) - nR*G(R).
    double gain(const Stats& parent, const Stats& l, const Stats& r) const {
        auto term = [](const Stats& s) {
            double n = s.n0 + s.n1;
            return n > 0 ? (s.n0 * s.n0 + s.n1 * s.n1) / n : 0.0;
        };
        return term(l) + term(r) - term(parent);
    }
    bool pure(const Stats& s, std::span<const std::uint32_t>) const { return s.n0 == 0 || s.n1 == 0; }
    bool accepts(double) const { return true; }
    double leaf_value(const Stats& s) const { return s.n1 / (s.n0 + s.n1); }
};

/// Squared-error reduction for real targets. Leaf value: mean target.
struct VarianceCriterion {
    std::span<const double> targets; // per slot

    struct Stats {
        double n = 0, sum = 0;
    };
    Stats empty() const { return {}; }
    void add(Stats& s, std::uint32_t slot) const {
        s.n += 1.0;
        s.sum += targets[slot];
    }
    Stats minus(const Stats& a, const Stats& b) const { return {a.n - b.n, a.sum - b.sum}; }
    double weight(const Stats& s) const { return s.n; }
    double gain(const Stats& parent, const Stats& l, const Stats& r) const {
        return l.sum * l.sum / l.n + r.sum * r.sum / r.n - parent.sum * parent.sum / parent.n;
    }
    bool pure(const Stats&, std::span<const std::uint32_t> slots) const {
        for (auto s : slots)
            if (targets[s] != targets[slots.front()]) return false;
        return true;
    }
    bool accepts(double) const { return true; }
    double leaf_value(const Stats& s) const { return s.sum / s.n; }
};

/// Second-order (gradient, hessian) objective with L1/L2 leaf penalties.
/// Leaf weight -T(G)/(H+lambda) with T the soft threshold at alpha; split gain
/// 1/2 [T(GL)^2/(HL+lambda) + T(GR)^2/(HR+lambda) - T(G)^2/(H+lambda)] - gamma.
struct NewtonCriterion {
    std::span<const double> grad; // per slot
    std::span<const double> hess; // per slot
    double lambda = 1.0;
    double alpha = 0.0;
    double gamma = 0.0;

    struct Stats {
        double n = 0, g = 0, h = 0;
    };
    Stats empty() const { return {}; }
    void add(Stats& s, std::uint32_t slot) const {
        s.n += 1.0;
        s.g += grad[slot];
        s.h += hess[slot];
    }
    Stats minus(const Stats& a, const Stats& b) const { return {a.n - b.n, a.g - b.g, a.h - b.h}; }
    double weight(const Stats& s) const { return s.n; }

    double soft(double g) const {
        if (g > alpha) return g - alpha;
        if (g < -alpha) return g + alpha;
        return 0.0;
    }
    double score(const Stats& s) const {
        double t = soft(s.g);
        double denom = s.h + lambda;
        return denom > 0 ? t * t / denom : 0.0;
    }
    double gain(const Stats& parent, const Stats& l, const Stats& r) const {
        return 0.5 * (score(l) + score(r) - score(parent)) - gamma;
    }
    bool pure(const Stats&, std::span<const std::uint32_t>) const { return false; }
    bool accepts(double gain) const { return gain > 0.0; }
    double leaf_value(const Stats& s) const {
        double denom = s.h + lambda;
        return denom > 0 ? -soft(s.g) / denom : 0.0;
    }
};

enum class SplitSearch { Auto, PerNodeSort, Presorted };

struct TreeParams {
    std::optional<int> max_depth; // empty: unlimited
    int min_split = 2;
    std::size_t feature_subset = 0; // 0 or >= d: every feature at every node
    SplitSearch search = SplitSearch::Auto;
};

namespace detail {

struct SplitChoice {
    bool found = false;
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
};

/// Per feature, slots ordered by (value, slot).
inline std::vector<std::vector<std::uint32_t>> presort_slots(const Matrix& x, std::span<const std::uint32_t> slot_rows) {
    std::vector<std::vector<std::uint32_t>> sorted(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto& order = sorted[f];
        order.resize(slot_rows.size());
        std::iota(order.begin(), order.end(), std::uint32_t{0});
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            double va = x(slot_rows[a], f), vb = x(slot_rows[b], f);
            return va < vb || (va == vb && a < b);
        });
    }
    return sorted;
}

inline double midpoint(double a, double b) {
    double m = a + (b - a) / 2.0;
    return m < b ? m : a; // adjacent doubles: keep a on the left
}

template <class Criterion>
class TreeGrower {
public:
    using Stats = typename Criterion::Stats;

    TreeGrower(const Matrix& x, std::span<const std::uint32_t> slot_rows, const Criterion& crit,
               const TreeParams& params, std::mt19937_64& rng,
               const std::vector<std::vector<std::uint32_t>>* presorted = nullptr)
        : x_(x), slot_rows_(slot_rows), crit_(crit), params_(params), rng_(rng) {
        const auto d = x.cols();
        subset_ = (params.feature_subset == 0 || params.feature_subset >= d) ? d : params.feature_subset;
        presorted_ = params.search == SplitSearch::Presorted ||
                     (params.search == SplitSearch::Auto && subset_ == d);
        features_.resize(d);
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        slots_.resize(slot_rows.size());
        std::iota(slots_.begin(), slots_.end(), std::uint32_t{0});
        if (presorted_) {
            sorted_ = presorted ? *presorted : presort_slots(x, slot_rows);
            goes_left_.assign(slots_.size(), 0);
            scratch_.resize(slots_.size());
        }
    }

    Tree grow() {
        Tree tree;
        if (!slots_.empty()) grow_node(tree, 0, slots_.size(), 0);
        return tree;
    }

private:
    double value(std::uint32_t slot, std::size_t f) const { return x_(slot_rows_[slot], f); }

    std::vector<std::size_t> candidate_features() {
        const auto d = features_.size();
        if (subset_ == d) return features_;
        // partial Fisher-Yates over a persistent permutation
        for (std::size_t i = 0; i < subset_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, d - 1);
            std::swap(features_[i], features_[pick(rng_)]);
        }
        std::vector<std::size_t> out(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(subset_));
        std::sort(out.begin(), out.end());
        return out;
    }

    // Scans one feature's node order and updates `best`.
    void scan(std::span<const std::uint32_t> ordered, std::size_t f, const Stats& total, SplitChoice& best) const {
        Stats left = crit_.empty();
        for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
            crit_.add(left, ordered[i]);
            double v = value(ordered[i], f);
            double next = value(ordered[i + 1], f);
            if (!(v < next)) continue;
            double g = crit_.gain(total, left, crit_.minus(total, left));
            if (!best.found || g > best.gain) {
                best = {true, g, f, midpoint(v, next)};
            }
        }
    }

    int grow_node(Tree& tree, std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::span<const std::uint32_t> node_slots(slots_.data() + begin, end - begin);

        Stats total = crit_.empty();
        for (auto s : node_slots) crit_.add(total, s);
        tree.nodes[id].value = crit_.leaf_value(total);
        tree.nodes[id].weight = crit_.weight(total);

        const auto n = end - begin;
        if (n < static_cast<std::size_t>(std::max(params_.min_split, 2))) return id;
        if (params_.max_depth && depth >= *params_.max_depth) return id;
        if (crit_.pure(total, node_slots)) return id;

        SplitChoice best;
        std::vector<std::pair<double, std::uint32_t>> buffer;
        std::vector<std::uint32_t> ordered;
        for (auto f : candidate_features()) {
            if (presorted_) {
                scan({sorted_[f].data() + begin, n}, f, total, best);
            } else {
                buffer.clear();
                for (auto s : node_slots) buffer.emplace_back(value(s, f), s);
                std::sort(buffer.begin(), buffer.end());
                ordered.resize(buffer.size());
                for (std::size_t i = 0; i < buffer.size(); ++i) ordered[i] = buffer[i].second;
                scan(ordered, f, total, best);
            }
        }
        if (!best.found || !crit_.accepts(best.gain)) return id;

        const auto mid = partition(begin, end, best.feature, best.threshold);
        tree.nodes[id].feature = static_cast<int>(best.feature);
        tree.nodes[id].threshold = best.threshold;
        int l = grow_node(tree, begin, mid, depth + 1);
        int r = grow_node(tree, mid, end, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }

    // Stable partition of every slot order in [begin, end); returns the split point.
    std::size_t partition(std::size_t begin, std::size_t end, std::size_t f, double threshold) {
        auto stable = [&](std::vector<std::uint32_t>& v, auto&& is_left) {
            std::size_t w = begin, spill = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (is_left(v[i])) v[w++] = v[i];
                else scratch_[spill++] = v[i];
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                      v.begin() + static_cast<std::ptrdiff_t>(w));
            return w;
        };
        if (scratch_.size() < slots_.size()) scratch_.resize(slots_.size());
        auto by_value = [&](std::uint32_t s) { return value(s, f) <= threshold; };
        if (!presorted_) return stable(slots_, by_value);

        for (std::size_t i = begin; i < end; ++i) goes_left_[slots_[i]] = by_value(slots_[i]) ? 1 : 0;
        auto by_flag = [&](std::uint32_t s) { return goes_left_[s] != 0; };
        for (auto& order : sorted_) stable(order, by_flag);
        return stable(slots_, by_flag);
    }

    const Matrix& x_;
    std::span<const std::uint32_t> slot_rows_;
    const Criterion& crit_;
    TreeParams params_;
    std::mt19937_64& rng_;
    std::size_t subset_ = 0;
    bool presorted_ = false;
    std::vector<std::size_t> features_;
    std::vector<std::uint32_t> slots_; // ascending within each node range
    std::vector<std::vector<std::uint32_t>> sorted_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
};

} // namespace detail

/// Grows one tree over `slot_rows` (slot -> matrix row); `crit` is indexed by slot.
/// `presorted`, when given, must be detail::presort_slots(x, slot_rows); callers
/// growing many trees over the same slots pass it to skip the sort.
template <class Criterion>
Tree grow_tree(const Matrix& x, std::span<const std::uint32_t> slot_rows, const Criterion& crit,
               const TreeParams& params, std::mt19937_64& rng,
               const std::vector<std::vector<std::uint32_t>>* presorted = nullptr) {
    if (slot_rows.empty()) throw Error(Errc::EmptyTrain, "tree needs at least one sample");
    return detail::TreeGrower<Criterion>(x, slot_rows, crit, params, rng, presorted).grow();
}

inline std::vector<std::uint32_t> identity_slots(std::size_t n) {
    std::vector<std::uint32_t> out(n);
    std::iota(out.begin(), out.end(), std::uint32_t{0});
    return out;
}

/// Gini classification tree on the full training set.
inline Tree cart_fit(const LabeledData& train, const TreeParams& params, std::mt19937_64& rng) {
    if (train.size() == 0) throw Error(Errc::EmptyTrain, "cart needs training data");
    const auto slots = identity_slots(train.size());
    GiniCriterion crit{train.y};
    return grow_tree(train.x, slots, crit, params, rng);
}

/// Regression tree on real targets (squared-error criterion).
inline Tree cart_fit_regression(const Matrix& x, std::span<const double> targets, const TreeParams& params,
                                std::mt19937_64& rng) {
    if (x.rows() == 0) throw Error(Errc::EmptyTrain, "cart needs training data");
    if (targets.size() != x.rows()) throw Error(Errc::LengthMismatch, "one target per row required");
    const auto slots = identity_slots(x.rows());
    VarianceCriterion crit{targets};
    return grow_tree(x, slots, crit, params, rng);
}

/// Leaf class of a gini tree: 1 only on a strict class-1 majority.
inline int tree_vote(const Tree& tree, std::span<const double> x) { return tree.value(x) > 0.5 ? 1 : 0; }

} // namespace cryptodir
