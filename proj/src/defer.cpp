#include "l2dcd/defer.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <cmath>

namespace l2dcd::defer {

std::set<int> disagreement_set(const PredictionMap& cd_preds, const PredictionMap& expert_preds) {
    if (cd_preds.size() != expert_preds.size() ||
        !std::equal(cd_preds.begin(), cd_preds.end(), expert_preds.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
        throw Error(ErrorKind::KeyMismatch, "prediction maps cover different pair ids");
    std::set<int> s;
    auto e = expert_preds.begin();
    for (const auto& [id, cd] : cd_preds) {
        if (cd != e->second) s.insert(id);
        ++e;
    }
    return s;
}

std::map<int, int> reduction_labels(const std::set<int>& s, const PredictionMap& expert_preds,
                                    const PredictionMap& truths) {
    std::map<int, int> labels;
    for (int id : s) {
        auto e = expert_preds.find(id);
        auto t = truths.find(id);
        if (e == expert_preds.end() || t == truths.end())
            throw Error(ErrorKind::KeyMismatch, "id " + std::to_string(id) + " missing from predictions or truths");
        labels[id] = e->second == t->second ? 1 : 0;
    }
    return labels;
}

// ---------------------------------------------------------------------------

double DeferralModel::soft_score(std::string_view description) const {
    return forest.soft_score(featurizer.transform(description));
}

nlohmann::json DeferralModel::to_json() const {
    return {{"format", "l2dcd.deferral_model"},
            {"version", kModelFormatVersion},
            {"hyperparameters",
             {{"n_trees", hp.n_trees},
              {"min_samples_split", hp.min_samples_split},
              {"max_features", std::string(to_string(hp.max_features))},
              {"seed", hp.seed}}},
            {"s_size", s_size},
            {"baseline_p", baseline_p},
            {"featurizer", featurizer.to_json()},
            {"forest", forest.to_json()}};
}

DeferralModel DeferralModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "l2dcd.deferral_model" ||
            j.at("version").get<int>() != kModelFormatVersion)
            throw Error(ErrorKind::InvalidConfig, "unsupported deferral model format");
        DeferralModel m;
        const auto& h = j.at("hyperparameters");
        m.hp.n_trees = h.at("n_trees").get<int>();
        m.hp.min_samples_split = h.at("min_samples_split").get<int>();
        m.hp.max_features = parse_max_features(h.at("max_features").get<std::string>());
        m.hp.seed = h.at("seed").get<std::uint64_t>();
        m.s_size = j.at("s_size").get<int>();
        m.baseline_p = j.at("baseline_p").get<double>();
        m.featurizer = features::Featurizer::from_json(j.at("featurizer"));
        m.forest = RandomForest::from_json(j.at("forest"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("deferral model JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

DeferralModel fit_on_disagreements(const std::vector<std::string>& corpus,
                                   const std::vector<std::string>& s_descriptions, const std::vector<int>& y_prime,
                                   const features::FeaturizerConfig& featurizer, const ForestHyperparams& hp) {
    if (s_descriptions.empty()) throw Error(ErrorKind::EmptyS, "predictors agree on every training instance");
    if (s_descriptions.size() != y_prime.size()) throw Error(ErrorKind::LengthMismatch, "descriptions vs labels");

    DeferralModel model;
    model.hp = hp;
    model.featurizer = features::Featurizer(featurizer);
    model.featurizer.fit(corpus);

    std::vector<LabeledRow> rows;
    rows.reserve(s_descriptions.size());
    int expert_correct = 0;
    for (std::size_t i = 0; i < s_descriptions.size(); ++i) {
        rows.push_back({model.featurizer.transform(s_descriptions[i]), y_prime[i]});
        expert_correct += y_prime[i];
    }
    model.forest = fit_forest(rows, hp);
    model.s_size = static_cast<int>(rows.size());
    model.baseline_p = static_cast<double>(expert_correct) / static_cast<double>(model.s_size);
    return model;
}

DeferralModel train_deferral(const std::vector<data::CausalPair>& pairs, const PredictionMap& cd_preds,
                             const PredictionMap& expert_preds, const features::FeaturizerConfig& featurizer,
                             const ForestHyperparams& hp) {
    PredictionMap cd, expert, truths;
    std::vector<std::string> corpus;
    std::map<int, const data::CausalPair*> by_id;
    for (const auto& p : pairs) {
        auto c = cd_preds.find(p.id);
        auto e = expert_preds.find(p.id);
        if (c == cd_preds.end() || e == expert_preds.end())
            throw Error(ErrorKind::KeyMismatch, "no prediction for pair " + std::to_string(p.id));
        cd[p.id] = c->second;
        expert[p.id] = e->second;
        truths[p.id] = p.truth;
        corpus.push_back(p.description);
        by_id[p.id] = &p;
    }
    const auto s = disagreement_set(cd, expert);
    const auto labels = reduction_labels(s, expert, truths);
    std::vector<std::string> s_descriptions;
    std::vector<int> y_prime;
    for (const auto& [id, label] : labels) {
        s_descriptions.push_back(by_id.at(id)->description);
        y_prime.push_back(label);
    }
    return fit_on_disagreements(corpus, s_descriptions, y_prime, featurizer, hp);
}

DeferralModel train_deferral(const std::vector<data::CausalPair>& pairs, const PairPredictor& cd_method,
                             const PairPredictor& expert, const features::FeaturizerConfig& featurizer,
                             const ForestHyperparams& hp) {
    PredictionMap cd, ex;
    for (const auto& p : pairs) {
        cd[p.id] = cd_method(p);
        ex[p.id] = expert(p);
    }
    return train_deferral(pairs, cd, ex, featurizer, hp);
}

DeferralModel always_cd_model(const std::vector<std::string>& corpus, const features::FeaturizerConfig& featurizer,
                              const ForestHyperparams& hp) {
    DeferralModel model;
    model.hp = hp;
    model.featurizer = features::Featurizer(featurizer);
    if (!corpus.empty()) model.featurizer.fit(corpus);
    DecisionTree::Node leaf;
    leaf.count0 = 1;
    model.forest = RandomForest({DecisionTree({leaf})});
    return model;
}

// ---------------------------------------------------------------------------

DeferralDecision decide(double soft_score, Direction cd_pred, Direction expert_pred) {
    const bool expert = soft_score >= 0.5;
    return {expert, expert ? expert_pred : cd_pred, soft_score};
}

DeferralDecision defer_predict(const DeferralModel& model, std::string_view description, Direction cd_pred,
                               Direction expert_pred) {
    return decide(model.soft_score(description), cd_pred, expert_pred);
}

double deferral_loss(std::span<const DeferralDecision> decisions, std::span<const Direction> cd_preds,
                     std::span<const Direction> expert_preds, std::span<const Direction> truths) {
    const auto n = decisions.size();
    if (cd_preds.size() != n || expert_preds.size() != n || truths.size() != n)
        throw Error(ErrorKind::LengthMismatch, "deferral_loss inputs are not aligned");
    if (n == 0) return 0.0;
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) total += instance_loss(decisions[i].chose_expert, cd_preds[i], expert_preds[i], truths[i]);
    return static_cast<double>(total) / static_cast<double>(n);
}

double score_to_logit(double soft_score) {
    const double p = std::clamp(soft_score, kLogitClip, 1.0 - kLogitClip);
    return std::log(p / (1.0 - p));
}

namespace {

// -log sigma(z), stable for large |z|.
double neg_log_sigmoid(double z) { return z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

}  // namespace

double surrogate_loss(std::span<const double> soft_scores, std::span<const int> cd_correct,
                      std::span<const int> expert_correct) {
    const auto n = soft_scores.size();
    if (cd_correct.size() != n || expert_correct.size() != n)
        throw Error(ErrorKind::LengthMismatch, "surrogate_loss inputs are not aligned");
    if (n == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r1 = score_to_logit(soft_scores[i]);
        total += cd_correct[i] * neg_log_sigmoid(-r1) + expert_correct[i] * neg_log_sigmoid(r1);
    }
    return total / static_cast<double>(n);
}

bool baseline_defers(double baseline_p, std::uint64_t sampling_seed, int pair_id) {
    return Rng::keyed({sampling_seed, static_cast<std::uint64_t>(pair_id), 0xba5e1ULL}).bernoulli(baseline_p);
}

Direction baseline_predict(double baseline_p, Direction cd_pred, Direction expert_pred, std::uint64_t sampling_seed,
                           int pair_id) {
    if (!(baseline_p >= 0.0 && baseline_p <= 1.0)) throw Error(ErrorKind::OutOfRange, "baseline_p outside [0, 1]");
    return baseline_defers(baseline_p, sampling_seed, pair_id) ? expert_pred : cd_pred;
}

}  // namespace l2dcd::defer
