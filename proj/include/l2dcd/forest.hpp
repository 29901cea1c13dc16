#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace l2dcd::defer {

enum class MaxFeatures { Sqrt, All };

struct ForestHyperparams {
    int n_trees = 100;
    int min_samples_split = 5;
    MaxFeatures max_features = MaxFeatures::Sqrt;
    std::uint64_t seed = 0;
};

void validate(const ForestHyperparams& hp);

struct LabeledRow {
    std::vector<double> features;
    int label = 0;  // 0 or 1
};

/// CART classification tree stored as a flat node array; node 0 is the root.
class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;     // feature value <= threshold
        int right = -1;
        int count0 = 0;
        int count1 = 0;

        bool leaf() const noexcept { return feature < 0; }
    };

    DecisionTree() = default;
    explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    /// Class voted by the reached leaf; an evenly split leaf votes 1.
    int predict(std::span<const double> x) const;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

private:
    std::vector<Node> nodes_;
};

/// Grows one tree on the given sample indices (duplicates allowed, as in a bootstrap).
DecisionTree grow_tree(std::span<const LabeledRow> rows, std::vector<std::size_t> sample, int min_samples_split,
                       MaxFeatures max_features, std::uint64_t seed);

class RandomForest {
public:
    RandomForest() = default;
    explicit RandomForest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

    /// Fraction of trees voting for class 1.
    double soft_score(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return soft_score(x) >= 0.5 ? 1 : 0; }

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

    nlohmann::json to_json() const;
    static RandomForest from_json(const nlohmann::json& j);

private:
    std::vector<DecisionTree> trees_;
};

/// Bootstrap-aggregated CART trees with Gini splits; deterministic given hp.seed.
RandomForest fit_forest(std::span<const LabeledRow> rows, const ForestHyperparams& hp);

std::string_view to_string(MaxFeatures m);
MaxFeatures parse_max_features(std::string_view text);

}  // namespace l2dcd::defer
