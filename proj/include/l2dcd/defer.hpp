#pragma once

#include "l2dcd/data.hpp"
#include "l2dcd/features.hpp"
#include "l2dcd/forest.hpp"
#include "l2dcd/types.hpp"

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace l2dcd::defer {

using PredictionMap = std::map<int, Direction>;
using PairPredictor = std::function<Direction(const data::CausalPair&)>;

/// Ids on which the causal-discovery method and the expert disagree.
std::set<int> disagreement_set(const PredictionMap& cd_preds, const PredictionMap& expert_preds);

/// y'_i = 1 iff the expert is correct on i, for i in S only.
std::map<int, int> reduction_labels(const std::set<int>& s, const PredictionMap& expert_preds,
                                    const PredictionMap& truths);

struct TrainingRow {
    int pair_id = 0;
    features::FeatureVector features;
    int y_prime = 0;
};

struct DeferralTrainingSet {
    std::vector<TrainingRow> rows;
    std::set<int> s_indices;
};

struct DeferralModel {
    RandomForest forest;
    features::Featurizer featurizer{features::FeaturizerConfig{}};
    ForestHyperparams hp;
    int s_size = 0;
    double baseline_p = 0.0;

    /// Forest vote fraction for "expert correct" on a description.
    double soft_score(std::string_view description) const;

    nlohmann::json to_json() const;
    static DeferralModel from_json(const nlohmann::json& j);
};

inline constexpr int kModelFormatVersion = 1;

/// Fits the featurizer on `corpus`, then the forest on (descriptions, y') restricted to S.
DeferralModel fit_on_disagreements(const std::vector<std::string>& corpus,
                                   const std::vector<std::string>& s_descriptions, const std::vector<int>& y_prime,
                                   const features::FeaturizerConfig& featurizer, const ForestHyperparams& hp);

/// Builds S and y' from precomputed predictions, then fits the deferral forest. Throws EmptyS.
DeferralModel train_deferral(const std::vector<data::CausalPair>& pairs, const PredictionMap& cd_preds,
                             const PredictionMap& expert_preds, const features::FeaturizerConfig& featurizer,
                             const ForestHyperparams& hp);

DeferralModel train_deferral(const std::vector<data::CausalPair>& pairs, const PairPredictor& cd_method,
                             const PairPredictor& expert, const features::FeaturizerConfig& featurizer,
                             const ForestHyperparams& hp);

/// Stand-in when S is empty: one leaf voting for the causal-discovery method.
DeferralModel always_cd_model(const std::vector<std::string>& corpus, const features::FeaturizerConfig& featurizer,
                              const ForestHyperparams& hp);

struct DeferralDecision {
    bool chose_expert = false;
    Direction prediction = Direction::Forward;
    double soft_score = 0.0;
};

/// Expert chosen iff soft_score >= 0.5.
DeferralDecision decide(double soft_score, Direction cd_pred, Direction expert_pred);

DeferralDecision defer_predict(const DeferralModel& model, std::string_view description, Direction cd_pred,
                               Direction expert_pred);

/// Per-instance deferral loss with the 0-1 expert cost.
inline int instance_loss(bool chose_expert, Direction cd_pred, Direction expert_pred, Direction truth) {
    return chose_expert ? (expert_pred != truth) : (cd_pred != truth);
}

double deferral_loss(std::span<const DeferralDecision> decisions, std::span<const Direction> cd_preds,
                     std::span<const Direction> expert_preds, std::span<const Direction> truths);

inline constexpr double kLogitClip = 1e-6;

/// log(p / (1 - p)) with p clipped to [1e-6, 1 - 1e-6].
double score_to_logit(double soft_score);

/// Logistic surrogate: mean of -1[cd correct] log sigma(-r1) - 1[expert correct] log sigma(r1),
/// with r1 = score_to_logit(soft score).
double surrogate_loss(std::span<const double> soft_scores, std::span<const int> cd_correct,
                      std::span<const int> expert_correct);

/// Random deferral: Bernoulli(baseline_p) keyed by (sampling seed, pair id).
bool baseline_defers(double baseline_p, std::uint64_t sampling_seed, int pair_id);

Direction baseline_predict(double baseline_p, Direction cd_pred, Direction expert_pred, std::uint64_t sampling_seed,
                           int pair_id);

}  // namespace l2dcd::defer
