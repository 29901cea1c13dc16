#include "l2dcd/eval.hpp"

#include "l2dcd/cd.hpp"
#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace l2dcd::eval {

MeanSe mean_se(std::span<const double> values) {
    MeanSe out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    // Identical values report an exact zero rather than summation round-off.
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) {
        out.mean = *lo;
        return out;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

std::string_view to_string(ExpertType t) {
    switch (t) {
        case ExpertType::Epsilon: return "epsilon";
        case ExpertType::P: return "p";
        case ExpertType::Remote: return "remote";
    }
    return "?";
}

ExpertSource ExpertSource::from_synthetic(experts::SyntheticExpertSpec spec) {
    ExpertSource s;
    s.name = spec.name;
    s.type = spec.deterministic() ? ExpertType::P : ExpertType::Epsilon;
    s.synthetic = std::move(spec);
    return s;
}

ExpertSource ExpertSource::from_remote(experts::RemoteExpertConfig cfg, std::string name) {
    ExpertSource s;
    s.name = std::move(name);
    s.type = ExpertType::Remote;
    s.remote = std::move(cfg);
    return s;
}

defer::PredictionMap ExpertSource::predict(const std::vector<data::CausalPair>& pairs, std::uint64_t seed) const {
    defer::PredictionMap out;
    if (synthetic) {
        auto spec = *synthetic;
        spec.seed = seed;
        for (const auto& p : pairs) out[p.id] = experts::synthetic_predict(spec, p).direction;
    } else if (remote) {
        auto cfg = *remote;
        cfg.seed = seed;
        for (const auto& p : pairs) out[p.id] = experts::remote_predict(cfg, p).direction;
    } else {
        throw Error(ErrorKind::InvalidConfig, "expert '" + name + "' has no backend");
    }
    return out;
}

std::optional<DomainMap<double>> ExpertSource::domain_probabilities() const {
    if (synthetic) return synthetic->p_by_domain;
    return std::nullopt;
}

CdSource cd_source(cd::Method method, const std::vector<data::CausalPair>& pairs) {
    CdSource out{std::string(cd::to_string(method)), {}};
    for (const auto& p : pairs) out.predictions[p.id] = cd::run(method, p.x_u, p.x_v).direction;
    return out;
}

CdSource noisy_cd_stub(double accuracy, std::uint64_t seed, const std::vector<data::CausalPair>& pairs) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error(ErrorKind::OutOfRange, "stub accuracy outside [0, 1]");
    CdSource out{"stub(" + std::to_string(accuracy).substr(0, 4) + ")", {}};
    for (const auto& p : pairs) {
        const bool correct = Rng::keyed({seed, static_cast<std::uint64_t>(p.id), 0xc0ffeeULL}).bernoulli(accuracy);
        out.predictions[p.id] = correct ? p.truth : opposite(p.truth);
    }
    return out;
}

double accuracy(const std::vector<data::CausalPair>& pairs, const defer::PredictionMap& preds, Weighting w) {
    double hit = 0.0, total = 0.0;
    for (const auto& p : pairs) {
        const double weight = w == Weighting::MetaWeights ? p.weight : 1.0;
        total += weight;
        if (preds.at(p.id) == p.truth) hit += weight;
    }
    return total > 0 ? hit / total : 0.0;
}

std::uint64_t baseline_sampling_seed(std::uint64_t train_seed, std::uint64_t baseline_seed) {
    return derive_seed({train_seed, baseline_seed, 0xba5eULL});
}

ModelScores score_model(const std::vector<data::CausalPair>& test_pairs, const defer::PredictionMap& cd_preds,
                        const defer::PredictionMap& expert_preds, const defer::DeferralModel& model,
                        std::span<const std::uint64_t> sampling_seeds, Weighting weighting) {
    if (test_pairs.empty()) throw Error(ErrorKind::Empty, "empty test set");
    ModelScores out;
    defer::PredictionMap l2d;
    for (const auto& p : test_pairs) {
        const auto c = cd_preds.at(p.id);
        const auto e = expert_preds.at(p.id);
        const auto decision = defer::defer_predict(model, p.description, c, e);
        l2d[p.id] = decision.prediction;
        out.l2d_deferred.push_back(decision.chose_expert);
    }
    out.cd_acc = accuracy(test_pairs, cd_preds, weighting);
    out.expert_acc = accuracy(test_pairs, expert_preds, weighting);
    out.l2d_acc = accuracy(test_pairs, l2d, weighting);
    for (auto seed : sampling_seeds) {
        defer::PredictionMap base;
        for (const auto& p : test_pairs)
            base[p.id] = defer::baseline_predict(model.baseline_p, cd_preds.at(p.id), expert_preds.at(p.id), seed, p.id);
        out.baseline_acc.push_back(accuracy(test_pairs, base, weighting));
    }
    return out;
}

namespace {

defer::DeferralModel train_or_fallback(const std::vector<data::CausalPair>& train_pairs,
                                       const defer::PredictionMap& cd_preds, const defer::PredictionMap& expert_preds,
                                       const features::FeaturizerConfig& featurizer, const defer::ForestHyperparams& hp,
                                       bool& empty_s) {
    try {
        empty_s = false;
        return defer::train_deferral(train_pairs, cd_preds, expert_preds, featurizer, hp);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyS) throw;
        empty_s = true;
        std::vector<std::string> corpus;
        for (const auto& p : train_pairs) corpus.push_back(p.description);
        return defer::always_cd_model(corpus, featurizer, hp);
    }
}

}  // namespace

ComboResult evaluate_combo(const std::vector<data::CausalPair>& train_pairs,
                           const std::vector<data::CausalPair>& test_pairs, const CdSource& cd,
                           const ExpertSource& expert, const ComboOptions& options) {
    if (test_pairs.empty()) throw Error(ErrorKind::Empty, "empty test set");
    if (options.train_seeds.empty()) throw Error(ErrorKind::InvalidConfig, "no training seeds");

    ComboResult result;
    std::vector<double> cd_acc, expert_acc, l2d_acc, baseline_acc;
    for (auto seed : options.train_seeds) {
        const auto expert_train = expert.predict(train_pairs, seed);
        const auto expert_test = expert.predict(test_pairs, seed);
        auto hp = options.hp;
        hp.seed = seed;
        bool empty_s = false;
        const auto model = train_or_fallback(train_pairs, cd.predictions, expert_train, options.featurizer, hp, empty_s);
        result.s_sizes.push_back(model.s_size);
        result.empty_s_seeds += empty_s ? 1 : 0;

        std::vector<std::uint64_t> sampling;
        for (auto b : options.baseline_seeds) sampling.push_back(baseline_sampling_seed(seed, b));
        const auto scores = score_model(test_pairs, cd.predictions, expert_test, model, sampling, options.weighting);
        cd_acc.push_back(scores.cd_acc);
        expert_acc.push_back(scores.expert_acc);
        l2d_acc.push_back(scores.l2d_acc);
        baseline_acc.insert(baseline_acc.end(), scores.baseline_acc.begin(), scores.baseline_acc.end());

        for (std::size_t i = 0; i < test_pairs.size(); ++i) {
            const auto& p = test_pairs[i];
            result.l2d.push_back({p.id, p.domain, cd.name, seed, scores.l2d_deferred[i]});
            for (auto s : sampling)
                result.baseline.push_back({p.id, p.domain, cd.name, s, defer::baseline_defers(model.baseline_p, s, p.id)});
        }
    }
    result.row = {cd.name,           expert.name,           mean_se(cd_acc), mean_se(expert_acc),
                  mean_se(l2d_acc), mean_se(baseline_acc), static_cast<int>(options.train_seeds.size())};
    return result;
}

// ---------------------------------------------------------------------------

std::vector<GridPoint> default_grid() {
    std::vector<GridPoint> grid;
    for (int trees : {10, 50, 100})
        for (int split : {2, 5})
            for (int dim : {5, 10, 15, 20, 50}) {
                GridPoint g;
                g.hp.n_trees = trees;
                g.hp.min_samples_split = split;
                g.embed_dim = dim;
                grid.push_back(g);
            }
    return grid;
}

double loo_loss(const std::vector<data::CausalPair>& train_pairs, const defer::PredictionMap& cd_preds,
                const defer::PredictionMap& expert_preds, const features::FeaturizerConfig& featurizer,
                const defer::ForestHyperparams& hp) {
    if (train_pairs.size() < 2) throw Error(ErrorKind::EmptyTraining, "leave-one-out needs at least two pairs");
    long total = 0;
    std::vector<data::CausalPair> rest;
    rest.reserve(train_pairs.size() - 1);
    for (std::size_t i = 0; i < train_pairs.size(); ++i) {
        const auto& held = train_pairs[i];
        const auto c = cd_preds.at(held.id);
        const auto e = expert_preds.at(held.id);
        if (c == e) {
            // Outside S the loss does not depend on the deferral function.
            total += c != held.truth;
            continue;
        }
        rest.clear();
        for (std::size_t j = 0; j < train_pairs.size(); ++j)
            if (j != i) rest.push_back(train_pairs[j]);
        bool empty_s = false;
        const auto model = train_or_fallback(rest, cd_preds, expert_preds, featurizer, hp, empty_s);
        const auto decision = defer::defer_predict(model, held.description, c, e);
        total += defer::instance_loss(decision.chose_expert, c, e, held.truth);
    }
    return static_cast<double>(total) / static_cast<double>(train_pairs.size());
}

LooResult loo_select(const std::vector<data::CausalPair>& train_pairs, const std::vector<GridPoint>& grid,
                     const std::vector<ExpertSource>& experts, const std::vector<CdSource>& cd_methods,
                     const std::vector<std::uint64_t>& seeds, const features::FeaturizerConfig& featurizer) {
    if (grid.empty()) throw Error(ErrorKind::EmptyGrid, "hyperparameter grid is empty");
    if (experts.empty() || cd_methods.empty() || seeds.empty())
        throw Error(ErrorKind::InvalidConfig, "LOO selection needs experts, CD methods and seeds");

    // Expert predictions are independent of the grid point.
    std::vector<std::vector<defer::PredictionMap>> expert_preds(experts.size());
    for (std::size_t e = 0; e < experts.size(); ++e)
        for (auto seed : seeds) expert_preds[e].push_back(experts[e].predict(train_pairs, seed));

    LooResult result;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto cfg = featurizer;
        cfg.dim = grid[g].embed_dim;
        std::map<ExpertType, std::vector<double>> by_type;
        for (std::size_t e = 0; e < experts.size(); ++e) {
            for (const auto& cd : cd_methods) {
                for (std::size_t s = 0; s < seeds.size(); ++s) {
                    auto hp = grid[g].hp;
                    hp.seed = seeds[s];
                    by_type[experts[e].type].push_back(loo_loss(train_pairs, cd.predictions, expert_preds[e][s], cfg, hp));
                }
            }
        }
        double across = 0.0;
        for (const auto& [type, losses] : by_type) across += mean_se(losses).mean;
        across /= static_cast<double>(by_type.size());
        result.scores.push_back(across);
        if (across < best) {
            best = across;
            result.best_index = g;
        }
    }
    result.best = grid[result.best_index];
    return result;
}

// ---------------------------------------------------------------------------

namespace {

double log_choose(long n, long k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double fisher_exact_greater(const ContingencyTable2x2& t) {
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) throw Error(ErrorKind::DegenerateMargins, "negative cell count");
    const long row1 = t.a + t.b;
    const long row2 = t.c + t.d;
    if (row1 < 1 || row2 < 1) throw Error(ErrorKind::DegenerateMargins, "empty row in contingency table");
    const long col1 = t.a + t.c;
    const long n = row1 + row2;
    const long hi = std::min(row1, col1);
    const double log_total = log_choose(n, col1);

    std::vector<double> log_terms;
    for (long x = t.a; x <= hi; ++x) log_terms.push_back(log_choose(row1, x) + log_choose(row2, col1 - x) - log_total);
    const double peak = *std::max_element(log_terms.begin(), log_terms.end());
    double sum = 0.0;
    for (double lt : log_terms) sum += std::exp(lt - peak);
    return std::min(1.0, std::exp(peak) * sum);
}

double iut_pvalue(std::span<const double> pvals) {
    if (pvals.empty()) throw Error(ErrorKind::Empty, "intersection-union test over no p-values");
    return *std::max_element(pvals.begin(), pvals.end());
}

std::vector<double> bh_adjust(std::span<const double> pvals) {
    const std::size_t m = pvals.size();
    for (double p : pvals)
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "p-value outside [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::vector<double> out(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double q = pvals[order[r]] * (static_cast<double>(m) / static_cast<double>(r + 1));
        running = std::min(running, q);
        out[order[r]] = running;
    }
    return out;
}

nlohmann::json ConsistencyReport::to_json() const {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [key, p] : per_pair_pvals)
        pairs.push_back({{"strong", std::string(display_name(key.first))},
                         {"weak", std::string(display_name(key.second))},
                         {"pval", p}});
    nlohmann::json count_json = nlohmann::json::object();
    for (const auto& [d, c] : counts)
        count_json[std::string(display_name(d))] = {{"deferred", c.first}, {"not_deferred", c.second}};
    return {{"method", method},
            {"expert", expert},
            {"per_pair_pvals", pairs},
            {"counts", count_json},
            {"iut_pval", iut_pval},
            {"corrected_pval", corrected_pval},
            {"consistent", consistent}};
}

ConsistencyReport domain_consistency(std::span<const DeferralObservation> observations,
                                     const DomainMap<double>& p_by_domain) {
    std::vector<Domain> strong, weak;
    for (Domain d : kAllDomains) {
        if (p_by_domain[index_of(d)] > 0.5) strong.push_back(d);
        if (p_by_domain[index_of(d)] < 0.5) weak.push_back(d);
    }
    if (strong.empty() || weak.empty())
        throw Error(ErrorKind::EmptyDomain, "expert needs at least one strong and one weak domain");

    ConsistencyReport report;
    DomainMap<std::pair<long, long>> counts{};
    for (const auto& o : observations) {
        auto& c = counts[index_of(o.domain)];
        (o.deferred ? c.first : c.second)++;
    }
    for (Domain d : kAllDomains) {
        const auto& c = counts[index_of(d)];
        if (c.first + c.second > 0) report.counts[d] = c;
    }
    for (Domain d : strong)
        if (!report.counts.contains(d)) throw Error(ErrorKind::EmptyDomain, std::string(display_name(d)));
    for (Domain d : weak)
        if (!report.counts.contains(d)) throw Error(ErrorKind::EmptyDomain, std::string(display_name(d)));

    std::vector<double> pvals;
    for (Domain plus : strong) {
        for (Domain minus : weak) {
            const auto& cp = counts[index_of(plus)];
            const auto& cm = counts[index_of(minus)];
            const double p = fisher_exact_greater({cp.first, cp.second, cm.first, cm.second});
            report.per_pair_pvals[{plus, minus}] = p;
            pvals.push_back(p);
        }
    }
    report.iut_pval = iut_pvalue(pvals);
    report.corrected_pval = report.iut_pval;
    report.consistent = report.corrected_pval < kSignificance;
    return report;
}

void apply_bh(std::vector<ConsistencyReport>& reports) {
    std::vector<double> raw;
    for (const auto& r : reports) raw.push_back(r.iut_pval);
    const auto adjusted = bh_adjust(raw);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        reports[i].corrected_pval = adjusted[i];
        reports[i].consistent = adjusted[i] < kSignificance;
    }
}

}  // namespace l2dcd::eval
