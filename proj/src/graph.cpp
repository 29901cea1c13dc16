#include "l2dcd/graph.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>

namespace l2dcd::graph {

namespace {

std::map<std::string, std::size_t> index_nodes(const std::vector<std::string>& nodes) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (!idx.emplace(nodes[i], i).second) throw Error(ErrorKind::InvalidGraph, "duplicate node '" + nodes[i] + "'");
    return idx;
}

// Kahn's algorithm; throws CyclicGraph when some node is never freed.
std::vector<std::size_t> topological_order(std::size_t n, const std::vector<std::vector<std::size_t>>& children) {
    std::vector<int> indegree(n, 0);
    for (const auto& cs : children)
        for (auto c : cs) ++indegree[c];
    std::vector<std::size_t> ready, order;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const auto i = ready.back();
        ready.pop_back();
        order.push_back(i);
        for (auto c : children[i])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (order.size() != n) throw Error(ErrorKind::CyclicGraph, "graph contains a directed cycle");
    return order;
}

std::vector<std::vector<std::size_t>> child_lists(const LabeledGraph& g, const std::map<std::string, std::size_t>& idx) {
    std::vector<std::vector<std::size_t>> children(g.nodes.size());
    for (const auto& [from, to] : g.edges) {
        auto f = idx.find(from);
        auto t = idx.find(to);
        if (f == idx.end() || t == idx.end())
            throw Error(ErrorKind::InvalidGraph, "edge " + from + " -> " + to + " references an unknown node");
        children[f->second].push_back(t->second);
    }
    return children;
}

}  // namespace

void LabeledGraph::validate() const {
    const auto idx = index_nodes(nodes);
    topological_order(nodes.size(), child_lists(*this, idx));
    std::optional<std::size_t> length;
    for (const auto& [name, column] : data) {
        if (!idx.contains(name)) throw Error(ErrorKind::InvalidGraph, "data for unknown node '" + name + "'");
        if (length && *length != column.size()) throw Error(ErrorKind::InvalidGraph, "data columns differ in length");
        length = column.size();
    }
}

nlohmann::json LabeledGraph::to_json() const {
    nlohmann::json e = nlohmann::json::array();
    for (const auto& [from, to] : edges) e.push_back({from, to});
    return {{"nodes", nodes}, {"edges", e}, {"context", context}, {"data", data}};
}

LabeledGraph LabeledGraph::from_json(const nlohmann::json& j) {
    LabeledGraph g;
    try {
        g.nodes = j.at("nodes").get<std::vector<std::string>>();
        for (const auto& e : j.value("edges", nlohmann::json::array()))
            g.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        g.context = j.value("context", "");
        if (j.contains("data")) g.data = j.at("data").get<std::map<std::string, std::vector<double>>>();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::InvalidGraph, std::string("graph JSON: ") + ex.what());
    }
    g.validate();
    return g;
}

LabeledGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
    try {
        return LabeledGraph::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw Error(ErrorKind::InvalidGraph, path.string() + ": " + ex.what());
    }
}

// ---------------------------------------------------------------------------

AncestryMatrix::AncestryMatrix(std::vector<std::string> names, std::vector<int> sigma)
    : names_(std::move(names)), sigma_(std::move(sigma)) {}

std::size_t AncestryMatrix::index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error(ErrorKind::UnknownId, "unknown node '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

int AncestryMatrix::sigma(const std::string& u, const std::string& v) const { return sigma(index(u), index(v)); }

AncestryMatrix ancestry_matrix(const LabeledGraph& g) {
    const auto idx = index_nodes(g.nodes);
    const auto children = child_lists(g, idx);
    const auto order = topological_order(g.nodes.size(), children);
    const std::size_t n = g.nodes.size();

    // Descendant sets, filled in reverse topological order.
    std::vector<std::vector<bool>> desc(n, std::vector<bool>(n, false));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        for (auto c : children[*it]) {
            desc[*it][c] = true;
            for (std::size_t k = 0; k < n; ++k)
                if (desc[c][k]) desc[*it][k] = true;
        }
    }
    std::vector<int> sigma(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (desc[i][j]) sigma[i * n + j] = 1;
            if (desc[j][i]) sigma[i * n + j] = -1;
        }
    return AncestryMatrix(g.nodes, std::move(sigma));
}

// ---------------------------------------------------------------------------

std::string pair_description(const std::string& context, const std::string& u, const std::string& v) {
    std::string out = context;
    if (!out.empty()) out += ' ';
    out += "Variables: " + u + " and " + v + ".";
    return out;
}

std::string PairRow::description() const { return pair_description(context, u, v); }

std::vector<PairRow> flatten_training(const std::vector<LabeledGraph>& graphs) {
    std::vector<PairRow> rows;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const auto& g = graphs[gi];
        const auto sigma = ancestry_matrix(g);
        auto names = g.nodes;
        std::sort(names.begin(), names.end());
        for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t j = i + 1; j < names.size(); ++j) {
                PairRow r;
                r.graph_index = gi;
                r.u = names[i];
                r.v = names[j];
                r.context = g.context;
                if (auto it = g.data.find(r.u); it != g.data.end()) r.x_u = it->second;
                if (auto it = g.data.find(r.v); it != g.data.end()) r.x_v = it->second;
                r.sigma = sigma.sigma(r.u, r.v);
                r.no_ancestry = r.sigma == 0;
                rows.push_back(std::move(r));
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

int Ranking::position(const std::string& name) const {
    auto it = std::find(order.begin(), order.end(), name);
    if (it == order.end()) throw Error(ErrorKind::UnknownId, "node '" + name + "' not ranked");
    return static_cast<int>(it - order.begin()) + 1;
}

Ranking aggregate_ranking(std::span<const Comparison> comparisons) {
    if (comparisons.empty()) throw Error(ErrorKind::NoComparisons, "no pairwise comparisons to aggregate");
    std::map<std::string, int> score;
    for (const auto& c : comparisons) {
        if (c.outcome != 1 && c.outcome != -1) throw Error(ErrorKind::OutOfRange, "comparison outcome must be +1 or -1");
        score[c.u] += c.outcome;
        score[c.v] -= c.outcome;
    }
    Ranking r;
    for (const auto& [name, s] : score) r.order.push_back(name);
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](const std::string& a, const std::string& b) { return score.at(a) > score.at(b); });
    return r;
}

namespace {

std::span<const double> column(const std::map<std::string, std::vector<double>>& data, const std::string& name) {
    auto it = data.find(name);
    if (it == data.end()) return {};
    return it->second;
}

}  // namespace

Ranking infer_order(const std::vector<std::string>& nodes, const std::string& context,
                    const std::map<std::string, std::vector<double>>& data, const defer::DeferralModel& model,
                    const AncestryOracle& cd_oracle, const AncestryOracle& expert) {
    if (nodes.size() < 2) throw Error(ErrorKind::InvalidGraph, "need at least two nodes");
    auto names = nodes;
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
        throw Error(ErrorKind::InvalidGraph, "duplicate node names");

    std::vector<Comparison> comparisons;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            const auto& u = names[i];
            const auto& v = names[j];
            const auto xu = column(data, u);
            const auto xv = column(data, v);
            const Ancestry c = cd_oracle(u, v, context, xu, xv);
            const Ancestry e = expert(u, v, context, xu, xv);
            Ancestry answer = c;
            if (c != e) answer = model.soft_score(pair_description(context, u, v)) >= 0.5 ? e : c;
            if (answer == Ancestry::None) continue;
            comparisons.push_back({u, v, answer == Ancestry::Forward ? 1 : -1});
        }
    }
    auto ranking = aggregate_ranking(comparisons);
    // Nodes that took part in no comparison go last, in name order.
    for (const auto& n : names)
        if (std::find(ranking.order.begin(), ranking.order.end(), n) == ranking.order.end()) ranking.order.push_back(n);
    return ranking;
}

AncestryOracle cd_ancestry_oracle(cd::Method method) {
    return [method](const std::string&, const std::string&, const std::string&, std::span<const double> x_u,
                    std::span<const double> x_v) {
        if (x_u.empty() || x_v.empty()) throw Error(ErrorKind::InvalidGraph, "causal discovery needs data columns");
        return cd::run(method, x_u, x_v).direction == Direction::Forward ? Ancestry::Forward : Ancestry::Backward;
    };
}

AncestryOracle simulated_oracle(const std::vector<LabeledGraph>& graphs, double accuracy, std::uint64_t seed) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error(ErrorKind::OutOfRange, "oracle accuracy outside [0, 1]");
    auto truths = std::make_shared<std::map<std::string, AncestryMatrix>>();
    for (const auto& g : graphs)
        if (!truths->emplace(g.context, ancestry_matrix(g)).second)
            throw Error(ErrorKind::InvalidGraph, "graphs share a context; the oracle cannot tell them apart");
    return [truths, accuracy, seed](const std::string& u, const std::string& v, const std::string& context,
                                    std::span<const double>, std::span<const double>) {
        auto it = truths->find(context);
        if (it == truths->end()) throw Error(ErrorKind::UnknownId, "no graph with this context");
        const int truth = it->second.sigma(u, v);
        Rng rng = Rng::keyed({seed, features::fnv1a64(context), features::fnv1a64(u), features::fnv1a64(v)});
        if (rng.bernoulli(accuracy)) return static_cast<Ancestry>(truth);
        // The two answers other than the truth, in {-1, 0, 1} order.
        int wrong[2], k = 0;
        for (int a = -1; a <= 1; ++a)
            if (a != truth) wrong[k++] = a;
        return static_cast<Ancestry>(wrong[rng.below(2)]);
    };
}

defer::DeferralModel train_graph_deferral(const std::vector<LabeledGraph>& graphs, const AncestryOracle& cd_oracle,
                                          const AncestryOracle& expert, const features::FeaturizerConfig& featurizer,
                                          const defer::ForestHyperparams& hp) {
    std::vector<std::string> corpus, s_descriptions;
    std::vector<int> y_prime;
    for (const auto& row : flatten_training(graphs)) {
        const auto description = row.description();
        corpus.push_back(description);
        const Ancestry c = cd_oracle(row.u, row.v, row.context, row.x_u, row.x_v);
        const Ancestry e = expert(row.u, row.v, row.context, row.x_u, row.x_v);
        if (c == e) continue;
        s_descriptions.push_back(description);
        y_prime.push_back(static_cast<int>(e) == row.sigma ? 1 : 0);
    }
    return defer::fit_on_disagreements(corpus, s_descriptions, y_prime, featurizer, hp);
}

double violation_rate(const Ranking& ranking, const AncestryMatrix& truth) {
    const auto& names = truth.names();
    long constraints = 0, violated = 0;
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (truth.sigma(i, j) != 1) continue;
            ++constraints;
            if (ranking.position(names[i]) > ranking.position(names[j])) ++violated;
        }
    return constraints == 0 ? 0.0 : static_cast<double>(violated) / static_cast<double>(constraints);
}

int kendall_tau_distance(const Ranking& a, const Ranking& b) {
    if (a.order.size() != b.order.size()) throw Error(ErrorKind::LengthMismatch, "rankings differ in size");
    int d = 0;
    for (std::size_t i = 0; i < a.order.size(); ++i)
        for (std::size_t j = i + 1; j < a.order.size(); ++j)
            if (b.position(a.order[i]) > b.position(a.order[j])) ++d;
    return d;
}

}  // namespace l2dcd::graph
