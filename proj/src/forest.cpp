#include "l2dcd/forest.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace l2dcd::defer {

void validate(const ForestHyperparams& hp) {
    if (hp.n_trees < 1) throw Error(ErrorKind::OutOfRange, "n_trees must be at least 1");
    if (hp.min_samples_split < 2) throw Error(ErrorKind::OutOfRange, "min_samples_split must be at least 2");
}

std::string_view to_string(MaxFeatures m) { return m == MaxFeatures::Sqrt ? "sqrt" : "all"; }

MaxFeatures parse_max_features(std::string_view text) {
    if (text == "sqrt") return MaxFeatures::Sqrt;
    if (text == "all") return MaxFeatures::All;
    throw Error(ErrorKind::InvalidConfig, "max_features must be 'sqrt' or 'all'");
}

int DecisionTree::predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].leaf()) {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    const auto& leaf = nodes_[static_cast<std::size_t>(i)];
    return leaf.count1 >= leaf.count0 ? 1 : 0;
}

namespace {

double gini(int c0, int c1) {
    const double n = c0 + c1;
    if (n == 0) return 0.0;
    const double p = c1 / n;
    return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child impurity (sum of n_child * gini_child)
};

class TreeGrower {
public:
    TreeGrower(std::span<const LabeledRow> rows, int min_samples_split, MaxFeatures max_features, std::uint64_t seed)
        : rows_(rows), min_split_(min_samples_split), rng_(seed) {
        n_features_ = rows.empty() ? 0 : rows.front().features.size();
        try_features_ = max_features == MaxFeatures::All
                            ? n_features_
                            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features_))));
    }

    std::vector<DecisionTree::Node> grow(std::vector<std::size_t> sample) {
        build(std::move(sample));
        return std::move(nodes_);
    }

private:
    int build(std::vector<std::size_t> sample) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        int c1 = 0;
        for (auto i : sample) c1 += rows_[i].label;
        const int c0 = static_cast<int>(sample.size()) - c1;
        nodes_[static_cast<std::size_t>(id)].count0 = c0;
        nodes_[static_cast<std::size_t>(id)].count1 = c1;
        if (static_cast<int>(sample.size()) < min_split_ || c0 == 0 || c1 == 0) return id;

        const SplitChoice split = best_split(sample, c0, c1);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto i : sample)
            (rows_[i].features[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
        sample.clear();
        sample.shrink_to_fit();

        const int l = build(std::move(left));
        const int r = build(std::move(right));
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    // Visits features in random order until try_features_ non-constant ones have been evaluated.
    SplitChoice best_split(const std::vector<std::size_t>& sample, int c0, int c1) {
        std::vector<std::size_t> order(n_features_);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

        SplitChoice best;
        best.impurity = std::numeric_limits<double>::infinity();
        std::size_t evaluated = 0;
        std::vector<std::pair<double, int>> column(sample.size());
        for (std::size_t f : order) {
            if (evaluated >= try_features_) break;
            for (std::size_t k = 0; k < sample.size(); ++k)
                column[k] = {rows_[sample[k]].features[f], rows_[sample[k]].label};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            ++evaluated;

            int left0 = 0, left1 = 0;
            for (std::size_t k = 0; k + 1 < column.size(); ++k) {
                (column[k].second ? left1 : left0)++;
                if (column[k].first == column[k + 1].first) continue;
                const int right0 = c0 - left0, right1 = c1 - left1;
                const double impurity = (left0 + left1) * gini(left0, left1) + (right0 + right1) * gini(right0, right1);
                if (impurity < best.impurity) {
                    double t = 0.5 * (column[k].first + column[k + 1].first);
                    if (t >= column[k + 1].first) t = column[k].first;
                    best = {static_cast<int>(f), t, impurity};
                }
            }
        }
        return best;
    }

    std::span<const LabeledRow> rows_;
    int min_split_;
    Rng rng_;
    std::size_t n_features_ = 0;
    std::size_t try_features_ = 0;
    std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

DecisionTree grow_tree(std::span<const LabeledRow> rows, std::vector<std::size_t> sample, int min_samples_split,
                       MaxFeatures max_features, std::uint64_t seed) {
    TreeGrower grower(rows, min_samples_split, max_features, seed);
    return DecisionTree(grower.grow(std::move(sample)));
}

RandomForest fit_forest(std::span<const LabeledRow> rows, const ForestHyperparams& hp) {
    validate(hp);
    if (rows.empty()) throw Error(ErrorKind::EmptyTraining, "no training rows");
    const std::size_t d = rows.front().features.size();
    for (const auto& r : rows) {
        if (r.features.size() != d) throw Error(ErrorKind::LengthMismatch, "feature vectors differ in length");
        if (r.label != 0 && r.label != 1) throw Error(ErrorKind::OutOfRange, "labels must be 0 or 1");
    }
    const std::size_t n = rows.size();
    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(hp.n_trees));
    for (int t = 0; t < hp.n_trees; ++t) {
        Rng rng = Rng::keyed({hp.seed, static_cast<std::uint64_t>(t), 0xf04e57ULL});
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.below(n);
        trees.push_back(grow_tree(rows, std::move(sample), hp.min_samples_split, hp.max_features, rng.next_u64()));
    }
    return RandomForest(std::move(trees));
}

double RandomForest::soft_score(std::span<const double> x) const {
    if (trees_.empty()) return 0.0;
    int votes = 0;
    for (const auto& t : trees_) votes += t.predict(x);
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

// ---------------------------------------------------------------------------
// JSON: nested split records

namespace {

nlohmann::json node_to_json(const std::vector<DecisionTree::Node>& nodes, int i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.leaf()) return {{"counts", {n.count0, n.count1}}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"counts", {n.count0, n.count1}},
            {"left", node_to_json(nodes, n.left)},
            {"right", node_to_json(nodes, n.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<DecisionTree::Node>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const auto counts = j.at("counts");
    nodes.back().count0 = counts.at(0).get<int>();
    nodes.back().count1 = counts.at(1).get<int>();
    if (j.contains("feature")) {
        const int feature = j.at("feature").get<int>();
        const double threshold = j.at("threshold").get<double>();
        const int l = node_from_json(j.at("left"), nodes);
        const int r = node_from_json(j.at("right"), nodes);
        auto& n = nodes[static_cast<std::size_t>(id)];
        n.feature = feature;
        n.threshold = threshold;
        n.left = l;
        n.right = r;
    }
    return id;
}

}  // namespace

nlohmann::json DecisionTree::to_json() const { return node_to_json(nodes_, 0); }

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    std::vector<Node> nodes;
    node_from_json(j, nodes);
    return DecisionTree(std::move(nodes));
}

nlohmann::json RandomForest::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees_) arr.push_back(t.to_json());
    return arr;
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
    std::vector<DecisionTree> trees;
    for (const auto& t : j) trees.push_back(DecisionTree::from_json(t));
    return RandomForest(std::move(trees));
}

}  // namespace l2dcd::defer
