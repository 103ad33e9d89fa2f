#pragma once

// Versioned JSON model files and the common predict contract.
//
// {
//   "format": "cryptodir-model", "version": 1, "kind": "knn" | "rf" | "gbt",
//   "hyperparams": {...}, "pipeline_hash": "...", "scaling": {column: divisor},
//   "columns": [...19 names], "window": 60, "payload": {...}
// }
// Tree payloads are parallel arrays over the pre-order node list.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cryptodir/classifiers/cart.hpp"
#include "cryptodir/classifiers/common.hpp"
#include "cryptodir/classifiers/forest.hpp"
#include "cryptodir/classifiers/gbt.hpp"
#include "cryptodir/classifiers/knn.hpp"
#include "cryptodir/dataset.hpp"

namespace cryptodir {

enum class ModelKind { Knn, Forest, Gbt };

inline std::string_view model_kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::Knn: return "knn";
    case ModelKind::Forest: return "rf";
    case ModelKind::Gbt: return "gbt";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "knn") return ModelKind::Knn;
    if (s == "rf") return ModelKind::Forest;
    if (s == "gbt") return ModelKind::Gbt;
    throw Error(Errc::BadConfig, "unknown model kind '" + std::string(s) + "' (knn|rf|gbt)");
}

/// Any of the three fitted classifiers.
class TrainedModel {
public:
    using Variant = std::variant<KnnModel, ForestModel, GbtModel>;

    TrainedModel() = default;
    explicit TrainedModel(Variant m) : model_(std::move(m)) {}

    ModelKind kind() const {
        return std::visit([](const auto& m) -> ModelKind {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KnnModel>) return ModelKind::Knn;
            else if constexpr (std::is_same_v<T, ForestModel>) return ModelKind::Forest;
            else return ModelKind::Gbt;
        }, model_);
    }

    Prediction predict(std::span<const double> x) const {
        return std::visit([&](const auto& m) -> Prediction {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, KnnModel>) return knn_predict(m, x);
            else if constexpr (std::is_same_v<T, ForestModel>) return rf_predict(m, x);
            else return gbt_predict(m, x);
        }, model_);
    }

    std::vector<int> predict_labels(std::span<const Sample> samples) const {
        std::vector<int> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(predict(s.features).label);
        return out;
    }

    const Variant& variant() const noexcept { return model_; }

private:
    Variant model_;
};

inline TrainedModel fit_model(ModelKind kind, const LabeledData& train, const Hyperparams& hp) {
    switch (kind) {
    case ModelKind::Knn: return TrainedModel(knn_fit(train, hp));
    case ModelKind::Forest: return TrainedModel(rf_fit(train, hp));
    case ModelKind::Gbt: return TrainedModel(gbt_fit(train, hp));
    }
    throw Error(Errc::BadConfig, "unknown model kind");
}

struct ModelFile {
    TrainedModel model;
    Hyperparams hyperparams;
    std::string pipeline_hash;
    ScalingStats scaling;
    std::size_t window = kDefaultWindow;
};

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json hyperparams_to_json(const Hyperparams& hp) {
    nlohmann::ordered_json j;
    j["knn_k"] = hp.knn_k;
    j["knn_minkowski_p"] = hp.knn_minkowski_p;
    j["knn_leaf_size"] = hp.knn_leaf_size;
    j["rf_trees"] = hp.rf_trees;
    j["rf_criterion"] = "gini";
    j["rf_min_split"] = hp.rf_min_split;
    j["rf_max_depth"] = hp.rf_max_depth ? nlohmann::ordered_json(*hp.rf_max_depth) : nlohmann::ordered_json(nullptr);
    j["rf_max_features"] =
        hp.rf_max_features ? nlohmann::ordered_json(*hp.rf_max_features) : nlohmann::ordered_json(nullptr);
    j["rf_bootstrap"] = hp.rf_bootstrap;
    j["gbt_eta"] = hp.gbt_eta;
    j["gbt_max_depth"] = hp.gbt_max_depth;
    j["gbt_lambda"] = hp.gbt_lambda;
    j["gbt_alpha"] = hp.gbt_alpha;
    j["gbt_gamma"] = hp.gbt_gamma;
    j["gbt_rounds"] = hp.gbt_rounds;
    j["seed"] = hp.seed;
    return j;
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
    Hyperparams hp;
    auto opt_int = [&](const char* k) -> std::optional<int> {
        if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
        return j.at(k).get<int>();
    };
    hp.knn_k = j.at("knn_k").get<int>();
    hp.knn_minkowski_p = j.at("knn_minkowski_p").get<double>();
    hp.knn_leaf_size = j.at("knn_leaf_size").get<int>();
    hp.rf_trees = j.at("rf_trees").get<int>();
    hp.rf_min_split = j.at("rf_min_split").get<int>();
    hp.rf_max_depth = opt_int("rf_max_depth");
    hp.rf_max_features = opt_int("rf_max_features");
    hp.rf_bootstrap = j.value("rf_bootstrap", true);
    hp.gbt_eta = j.at("gbt_eta").get<double>();
    hp.gbt_max_depth = j.at("gbt_max_depth").get<int>();
    hp.gbt_lambda = j.at("gbt_lambda").get<double>();
    hp.gbt_alpha = j.at("gbt_alpha").get<double>();
    hp.gbt_gamma = j.at("gbt_gamma").get<double>();
    hp.gbt_rounds = j.at("gbt_rounds").get<int>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.validate();
    return hp;
}

namespace detail {

inline nlohmann::ordered_json tree_to_json(const Tree& t) {
    nlohmann::ordered_json feature = nlohmann::ordered_json::array(), threshold = nlohmann::ordered_json::array(),
                           left = nlohmann::ordered_json::array(), right = nlohmann::ordered_json::array(),
                           value = nlohmann::ordered_json::array(), weight = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
        weight.push_back(n.weight);
    }
    nlohmann::ordered_json j;
    j["feature"] = std::move(feature);
    j["threshold"] = std::move(threshold);
    j["left"] = std::move(left);
    j["right"] = std::move(right);
    j["value"] = std::move(value);
    j["weight"] = std::move(weight);
    return j;
}

inline Tree tree_from_json(const nlohmann::json& j, std::size_t n_features) {
    const auto& feature = j.at("feature");
    const auto n = feature.size();
    const auto& threshold = j.at("threshold");
    const auto& left = j.at("left");
    const auto& right = j.at("right");
    const auto& value = j.at("value");
    const auto& weight = j.at("weight");
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
        weight.size() != n)
        throw Error(Errc::ModelFormat, "tree arrays have inconsistent lengths");
    Tree t;
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node.feature = feature[i].get<int>();
        node.threshold = threshold[i].get<double>();
        node.left = left[i].get<int>();
        node.right = right[i].get<int>();
        node.value = value[i].get<double>();
        node.weight = weight[i].get<double>();
        if (!node.is_leaf()) {
            auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
            if (static_cast<std::size_t>(node.feature) >= n_features || !in_range(node.left) || !in_range(node.right))
                throw Error(Errc::ModelFormat, "tree node " + std::to_string(i) + " is malformed");
        }
    }
    return t;
}

inline nlohmann::ordered_json payload_to_json(const TrainedModel& m) {
    return std::visit([](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        nlohmann::ordered_json p;
        if constexpr (std::is_same_v<T, KnnModel>) {
            p["k"] = model.k;
            p["minkowski_p"] = model.p;
            p["leaf_size"] = model.leaf_size;
            p["n_features"] = model.dimension();
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (std::size_t r = 0; r < model.size(); ++r) {
                auto row = model.x.row(r);
                rows.push_back(std::vector<double>(row.begin(), row.end()));
            }
            p["instances"] = std::move(rows);
            p["labels"] = model.y;
        } else if constexpr (std::is_same_v<T, ForestModel>) {
            p["seed"] = model.seed;
            p["n_features"] = model.n_features;
            nlohmann::ordered_json trees = nlohmann::ordered_json::array();
            for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
            p["trees"] = std::move(trees);
        } else {
            p["base_score"] = model.base_score;
            p["eta"] = model.eta;
            p["n_features"] = model.n_features;
            nlohmann::ordered_json trees = nlohmann::ordered_json::array();
            for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
            p["trees"] = std::move(trees);
        }
        return p;
    }, m.variant());
}

inline TrainedModel payload_from_json(ModelKind kind, const nlohmann::json& p) {
    const auto d = p.at("n_features").get<std::size_t>();
    switch (kind) {
    case ModelKind::Knn: {
        KnnModel m;
        m.k = p.at("k").get<int>();
        m.p = p.at("minkowski_p").get<double>();
        m.leaf_size = p.at("leaf_size").get<int>();
        const auto& rows = p.at("instances");
        std::vector<double> data;
        data.reserve(rows.size() * d);
        for (const auto& row : rows) {
            if (row.size() != d) throw Error(Errc::ModelFormat, "kNN instance has wrong width");
            for (const auto& v : row) data.push_back(v.get<double>());
        }
        m.x = Matrix(rows.size(), d, std::move(data));
        m.y = p.at("labels").get<std::vector<int>>();
        if (m.y.size() != m.x.rows() || m.k < 1 || static_cast<std::size_t>(m.k) > m.y.size())
            throw Error(Errc::ModelFormat, "kNN payload is inconsistent");
        if (m.resolved_search() == NeighborSearch::KdTree)
            m.index = detail::KdTree(m.x, static_cast<std::size_t>(m.leaf_size));
        return TrainedModel(std::move(m));
    }
    case ModelKind::Forest: {
        ForestModel m;
        m.seed = p.at("seed").get<std::uint64_t>();
        m.n_features = d;
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, d));
        if (m.trees.empty()) throw Error(Errc::ModelFormat, "forest without trees");
        return TrainedModel(std::move(m));
    }
    case ModelKind::Gbt: {
        GbtModel m;
        m.base_score = p.at("base_score").get<double>();
        m.eta = p.at("eta").get<double>();
        m.n_features = d;
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, d));
        return TrainedModel(std::move(m));
    }
    }
    throw Error(Errc::ModelFormat, "unknown model kind");
}

} // namespace detail

inline nlohmann::ordered_json model_to_json(const ModelFile& f) {
    nlohmann::ordered_json j;
    j["format"] = "cryptodir-model";
    j["version"] = kModelFormatVersion;
    j["kind"] = model_kind_name(f.model.kind());
    j["hyperparams"] = hyperparams_to_json(f.hyperparams);
    j["pipeline_hash"] = f.pipeline_hash;
    j["scaling"] = f.scaling.to_json();
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (auto c : kColumnRoster) cols.push_back(std::string(c));
    j["columns"] = std::move(cols);
    j["window"] = f.window;
    j["payload"] = detail::payload_to_json(f.model);
    return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "cryptodir-model")
            throw Error(Errc::ModelFormat, "not a model file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw Error(Errc::ModelFormat, "unsupported model version " + j.at("version").dump());
        const auto& cols = j.at("columns");
        if (cols.size() != kFrameColumns) throw Error(Errc::ModelFormat, "column roster mismatch");
        for (std::size_t c = 0; c < kFrameColumns; ++c)
            if (cols[c].get<std::string>() != kColumnRoster[c])
                throw Error(Errc::ModelFormat, "column roster mismatch at " + std::to_string(c));
        ModelFile f;
        const auto kind = parse_model_kind(j.at("kind").get<std::string>());
        f.hyperparams = hyperparams_from_json(j.at("hyperparams"));
        f.pipeline_hash = j.at("pipeline_hash").get<std::string>();
        f.scaling = ScalingStats::from_json(j.at("scaling"));
        f.window = j.at("window").get<std::size_t>();
        f.model = detail::payload_from_json(kind, j.at("payload"));
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ModelFormat, e.what());
    }
}

} // namespace cryptodir
