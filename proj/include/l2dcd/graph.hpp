#pragma once

#include "l2dcd/cd.hpp"
#include "l2dcd/defer.hpp"
#include "l2dcd/features.hpp"
#include "l2dcd/forest.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace l2dcd::graph {

/// A DAG over named variables with a shared textual context and one data column per node.
struct LabeledGraph {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string context;
    std::map<std::string, std::vector<double>> data;

    /// InvalidGraph for unknown or duplicate nodes, ragged data; CyclicGraph for cycles.
    void validate() const;

    nlohmann::json to_json() const;
    static LabeledGraph from_json(const nlohmann::json& j);
};

LabeledGraph load_graph(const std::filesystem::path& path);

/// Ancestry relation between an ordered node pair (u, v).
enum class Ancestry { Backward = -1, None = 0, Forward = 1 };

/// sigma(u, v) = 1 iff u is a (transitive) ancestor of v, -1 for the reverse, 0 otherwise.
class AncestryMatrix {
public:
    AncestryMatrix(std::vector<std::string> names, std::vector<int> sigma);

    int sigma(std::size_t i, std::size_t j) const { return sigma_[i * names_.size() + j]; }
    int sigma(const std::string& u, const std::string& v) const;
    std::size_t index(const std::string& name) const;
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
    std::vector<int> sigma_;  // row-major, |V| x |V|
};

AncestryMatrix ancestry_matrix(const LabeledGraph& g);

/// One unordered node pair of one graph, oriented lexicographically (u < v).
struct PairRow {
    std::size_t graph_index = 0;
    std::string u;
    std::string v;
    std::string context;
    std::vector<double> x_u;
    std::vector<double> x_v;
    int sigma = 0;
    bool no_ancestry = false;

    std::string description() const;
};

/// Text shown to the featurizer and expert for a node pair.
std::string pair_description(const std::string& context, const std::string& u, const std::string& v);

std::vector<PairRow> flatten_training(const std::vector<LabeledGraph>& graphs);

struct Comparison {
    std::string u;
    std::string v;
    int outcome = 1;  // 1: u ranked before v; -1: v before u
};

struct Ranking {
    std::vector<std::string> order;

    /// 1-based rank of a node.
    int position(const std::string& name) const;
    nlohmann::json to_json() const { return order; }
};

/// Borda aggregation: score = wins - losses, descending, ties by name.
Ranking aggregate_ranking(std::span<const Comparison> comparisons);

/// Answers the ancestry question for an ordered pair (u, v) with the pair's data columns.
using AncestryOracle =
    std::function<Ancestry(const std::string& u, const std::string& v, const std::string& context,
                           std::span<const double> x_u, std::span<const double> x_v)>;

/// Causal-discovery oracle: the bivariate method on the two data columns (never None).
AncestryOracle cd_ancestry_oracle(cd::Method method);

/// Simulated oracle over known graphs (looked up by context): the true ancestry with probability
/// `accuracy`, otherwise one of the two wrong answers, chosen uniformly; keyed by (seed, context, u, v).
AncestryOracle simulated_oracle(const std::vector<LabeledGraph>& graphs, double accuracy, std::uint64_t seed);

/// Queries every node pair through the deferral model; NoAncestry answers are discarded.
Ranking infer_order(const std::vector<std::string>& nodes, const std::string& context,
                    const std::map<std::string, std::vector<double>>& data, const defer::DeferralModel& model,
                    const AncestryOracle& cd_oracle, const AncestryOracle& expert);

/// Deferral model on flattened rows: y' = 1[expert agrees with sigma] on rows where the two disagree.
defer::DeferralModel train_graph_deferral(const std::vector<LabeledGraph>& graphs, const AncestryOracle& cd_oracle,
                                          const AncestryOracle& expert, const features::FeaturizerConfig& featurizer,
                                          const defer::ForestHyperparams& hp);

/// Fraction of ancestral pairs (sigma != 0) whose order the ranking contradicts.
double violation_rate(const Ranking& ranking, const AncestryMatrix& truth);

/// Number of discordant node pairs between two rankings of the same node set.
int kendall_tau_distance(const Ranking& a, const Ranking& b);

}  // namespace l2dcd::graph
