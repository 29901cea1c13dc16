#include "helpers.hpp"

#include "l2dcd/forest.hpp"

using namespace l2dcd;
using namespace l2dcd::defer;

namespace {

std::vector<LabeledRow> noisy_rows(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledRow r;
        for (std::size_t k = 0; k < d; ++k) r.features.push_back(rng.normal());
        r.label = (r.features[0] + 0.5 * rng.normal()) > 0 ? 1 : 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

// Two classes on the first axis separated by a gap of width 1, second axis pure noise.
std::vector<LabeledRow> separable_rows() {
    Rng rng(21);
    std::vector<LabeledRow> rows;
    for (int i = 0; i < 40; ++i) {
        const int label = i % 2;
        const double x0 = label ? rng.uniform(0.5, 3.0) : rng.uniform(-3.0, -0.5);
        rows.push_back({{x0, rng.uniform(-3.0, 3.0)}, label});
    }
    return rows;
}

}  // namespace

TEST(Forest, SingleClassGivesConstantScore) {
    auto rows = noisy_rows(1, 30, 4);
    for (auto& r : rows) r.label = 1;
    const auto ones = fit_forest(rows, {});
    auto zeros_rows = rows;
    for (auto& r : zeros_rows) r.label = 0;
    const auto zeros = fit_forest(zeros_rows, {});
    for (const auto& probe : noisy_rows(2, 20, 4)) {
        EXPECT_EQ(ones.soft_score(probe.features), 1.0);
        EXPECT_EQ(zeros.soft_score(probe.features), 0.0);
    }
}

TEST(Forest, DeterministicGivenSeed) {
    const auto rows = noisy_rows(3, 60, 10);
    ForestHyperparams hp;
    hp.seed = 17;
    const auto a = fit_forest(rows, hp);
    const auto b = fit_forest(rows, hp);
    EXPECT_EQ(a.to_json(), b.to_json());
    hp.seed = 18;
    const auto c = fit_forest(rows, hp);
    EXPECT_NE(a.to_json(), c.to_json());
    for (const auto& probe : noisy_rows(4, 50, 10)) EXPECT_EQ(a.soft_score(probe.features), b.soft_score(probe.features));
}

TEST(Forest, SeparableToySetFitsPerfectly) {
    const auto rows = separable_rows();
    ForestHyperparams hp;
    hp.seed = 5;
    const auto forest = fit_forest(rows, hp);
    ASSERT_EQ(forest.trees().size(), 100u);
    // Each bootstrap is separable by a single first-axis cut inside the gap, and that
    // cut is the Gini-optimal root, so every tree agrees with the labels everywhere.
    for (const auto& tree : forest.trees()) {
        const auto& root = tree.nodes().front();
        if (root.leaf()) continue;  // a single-class bootstrap
        EXPECT_EQ(root.feature, 0);
        EXPECT_GT(root.threshold, -0.5);
        EXPECT_LT(root.threshold, 0.5);
    }
    int correct = 0;
    for (const auto& r : rows) correct += forest.predict(r.features) == r.label;
    EXPECT_EQ(correct, 40);
}

TEST(Forest, LeafTieVotesForClassOne) {
    DecisionTree::Node leaf;
    leaf.count0 = 2;
    leaf.count1 = 2;
    const DecisionTree tree({leaf});
    EXPECT_EQ(tree.predict(std::vector<double>{0.0}), 1);
}

TEST(Forest, JsonRoundTrip) {
    const auto rows = noisy_rows(6, 40, 5);
    ForestHyperparams hp;
    hp.n_trees = 10;
    const auto forest = fit_forest(rows, hp);
    const auto back = RandomForest::from_json(nlohmann::json::parse(forest.to_json().dump()));
    EXPECT_EQ(back.to_json(), forest.to_json());
    for (const auto& probe : noisy_rows(7, 30, 5)) EXPECT_EQ(back.soft_score(probe.features), forest.soft_score(probe.features));
}

TEST(Forest, MinSamplesSplitStopsGrowth) {
    const auto rows = noisy_rows(8, 30, 3);
    ForestHyperparams hp;
    hp.n_trees = 5;
    hp.min_samples_split = 1000;
    const auto forest = fit_forest(rows, hp);
    for (const auto& t : forest.trees()) EXPECT_EQ(t.nodes().size(), 1u);
}

TEST(Forest, Errors) {
    EXPECT_ERROR_KIND(fit_forest(std::vector<LabeledRow>{}, {}), ErrorKind::EmptyTraining);
    ForestHyperparams hp;
    hp.n_trees = 0;
    EXPECT_ERROR_KIND(validate(hp), ErrorKind::OutOfRange);
    hp.n_trees = 1;
    hp.min_samples_split = 1;
    EXPECT_ERROR_KIND(validate(hp), ErrorKind::OutOfRange);
    std::vector<LabeledRow> ragged = {{{1.0, 2.0}, 0}, {{1.0}, 1}};
    EXPECT_ERROR_KIND(fit_forest(ragged, {}), ErrorKind::LengthMismatch);
    EXPECT_EQ(parse_max_features("all"), MaxFeatures::All);
    EXPECT_ERROR_KIND(parse_max_features("log2"), ErrorKind::InvalidConfig);
}
