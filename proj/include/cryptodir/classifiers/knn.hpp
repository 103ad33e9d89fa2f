#pragma once

// Distance-weighted k-nearest-neighbour classifier with an optional k-d tree.
//
// Neighbours are ranked by (distance, training index); the k-d tree only prunes
// subtrees whose lower bound strictly exceeds the current k-th distance, so it
// returns exactly the brute-force neighbour set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "cryptodir/classifiers/common.hpp"

namespace cryptodir {

enum class NeighborSearch { Auto, BruteForce, KdTree };

namespace detail {

/// Sum over |a_i - b_i|^p; the p-th root is taken only for vote weights.
inline double minkowski_power(std::span<const double> a, std::span<const double> b, double p) {
    double acc = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            acc += d * d;
        }
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), p);
    }
    return acc;
}

inline double axis_power(double delta, double p) {
    return p == 2.0 ? delta * delta : std::pow(std::abs(delta), p);
}

struct Neighbor {
    double power = 0.0; // distance^p
    std::size_t index = 0;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.power < b.power || (a.power == b.power && a.index < b.index);
    }
};

class KdTree {
public:
    struct Node {
        std::size_t begin = 0, end = 0; // range in order_
        int axis = -1;                  // -1: leaf
        double threshold = 0.0;
        int left = -1, right = -1;
    };

    KdTree() = default;
    KdTree(const Matrix& x, std::size_t leaf_size) : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
        order_.resize(x.rows());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (!order_.empty()) build(x, 0, order_.size());
    }

    bool empty() const noexcept { return nodes_.empty(); }

    std::vector<Neighbor> query(const Matrix& x, std::span<const double> probe, std::size_t k, double p) const {
        std::priority_queue<Neighbor> best; // max-heap: worst neighbour on top
        if (!nodes_.empty()) search(x, probe, k, p, 0, best);
        std::vector<Neighbor> out;
        out.reserve(best.size());
        while (!best.empty()) {
            out.push_back(best.top());
            best.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    int build(const Matrix& x, std::size_t begin, std::size_t end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= leaf_size_) return id;

        std::size_t axis = 0;
        double widest = -1.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double lo = x(order_[begin], c), hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                lo = std::min(lo, x(order_[i], c));
                hi = std::max(hi, x(order_[i], c));
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = c;
            }
        }
        if (widest <= 0.0) return id; // all points identical

        const auto mid = begin + (end - begin) / 2;
        auto first = order_.begin() + static_cast<std::ptrdiff_t>(begin);
        std::nth_element(first, order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                             double va = x(a, axis), vb = x(b, axis);
                             return va < vb || (va == vb && a < b);
                         });
        // left holds values <= threshold, right values >= threshold
        nodes_[id].axis = static_cast<int>(axis);
        nodes_[id].threshold = x(order_[mid], axis);
        int l = build(x, begin, mid);
        int r = build(x, mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    static void offer(std::priority_queue<Neighbor>& best, std::size_t k, Neighbor n) {
        if (best.size() < k) {
            best.push(n);
        } else if (n < best.top()) {
            best.pop();
            best.push(n);
        }
    }

    void search(const Matrix& x, std::span<const double> probe, std::size_t k, double p, int id,
                std::priority_queue<Neighbor>& best) const {
        const auto& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                auto idx = order_[i];
                offer(best, k, {minkowski_power(x.row(idx), probe, p), idx});
            }
            return;
        }
        const double v = probe[static_cast<std::size_t>(node.axis)];
        const bool go_left = v <= node.threshold;
        const int near = go_left ? node.left : node.right;
        const int far = go_left ? node.right : node.left;
        search(x, probe, k, p, near, best);
        // Every point across the plane is at least this far along the split axis alone.
        const double bound = axis_power(v - node.threshold, p);
        if (best.size() < k || !(bound > best.top().power)) search(x, probe, k, p, far, best);
    }

    std::size_t leaf_size_ = 30;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace detail

struct KnnModel {
    Matrix x;
    std::vector<int> y;
    int k = 5;
    double p = 2.0;
    int leaf_size = 30;
    NeighborSearch search = NeighborSearch::Auto;
    detail::KdTree index; // built when the resolved search is KdTree

    std::size_t size() const noexcept { return y.size(); }
    std::size_t dimension() const noexcept { return x.cols(); }

    NeighborSearch resolved_search() const noexcept {
        if (search != NeighborSearch::Auto) return search;
        // Axis-aligned pruning stops paying off in high dimension.
        return x.cols() <= 16 ? NeighborSearch::KdTree : NeighborSearch::BruteForce;
    }
};

inline KnnModel knn_fit(LabeledData train, const Hyperparams& hp,
                        NeighborSearch search = NeighborSearch::Auto) {
    hp.validate();
    if (train.size() == 0) throw Error(Errc::EmptyTrain, "kNN needs training data");
    if (static_cast<std::size_t>(hp.knn_k) > train.size())
        throw Error(Errc::KTooLarge, "k=" + std::to_string(hp.knn_k) + " exceeds " +
                                         std::to_string(train.size()) + " samples");
    KnnModel m{std::move(train.x), std::move(train.y), hp.knn_k, hp.knn_minkowski_p, hp.knn_leaf_size, search, {}};
    if (m.resolved_search() == NeighborSearch::KdTree)
        m.index = detail::KdTree(m.x, static_cast<std::size_t>(m.leaf_size));
    return m;
}

inline KnnModel knn_fit(std::span<const Sample> train, const Hyperparams& hp,
                        NeighborSearch search = NeighborSearch::Auto) {
    if (train.empty()) throw Error(Errc::EmptyTrain, "kNN needs training data");
    return knn_fit(to_labeled(train), hp, search);
}

/// The k nearest training rows ordered by (distance, index).
inline std::vector<detail::Neighbor> knn_neighbors(const KnnModel& m, std::span<const double> x) {
    check_dimension(x, m.dimension());
    const auto k = static_cast<std::size_t>(m.k);
    if (m.resolved_search() == NeighborSearch::KdTree && !m.index.empty()) return m.index.query(m.x, x, k, m.p);

    std::vector<detail::Neighbor> all(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) all[i] = {detail::minkowski_power(m.x.row(i), x, m.p), i};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return all;
}

/// Each neighbour votes with weight 1/distance. Neighbours at distance zero
/// decide alone by majority; every tie resolves to label 0.
inline Prediction knn_predict(const KnnModel& m, std::span<const double> x) {
    const auto neighbors = knn_neighbors(m, x);
    double exact[2] = {0, 0};
    for (const auto& n : neighbors)
        if (n.power == 0.0) exact[m.y[n.index]] += 1.0;
    if (exact[0] + exact[1] > 0) {
        return {exact[1] > exact[0] ? 1 : 0, exact[1] / (exact[0] + exact[1])};
    }
    double weight[2] = {0, 0};
    for (const auto& n : neighbors) {
        double dist = m.p == 2.0 ? std::sqrt(n.power) : std::pow(n.power, 1.0 / m.p);
        weight[m.y[n.index]] += 1.0 / dist;
    }
    return {weight[1] > weight[0] ? 1 : 0, weight[1] / (weight[0] + weight[1])};
}

} // namespace cryptodir
