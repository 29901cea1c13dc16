#pragma once

#include "l2dcd/cd.hpp"
#include "l2dcd/data.hpp"
#include "l2dcd/defer.hpp"
#include "l2dcd/experts.hpp"
#include "l2dcd/features.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace l2dcd::eval {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
};

MeanSe mean_se(std::span<const double> values);

struct AccuracyRow {
    std::string cd_name;
    std::string expert_name;
    MeanSe cd_acc;
    MeanSe expert_acc;
    MeanSe l2d_acc;
    MeanSe baseline_acc;
    int n_seeds = 0;
};

enum class ExpertType { Epsilon, P, Remote };

std::string_view to_string(ExpertType t);

/// An expert family member: produces a predictor for each random seed.
struct ExpertSource {
    std::string name;
    ExpertType type = ExpertType::P;
    std::optional<experts::SyntheticExpertSpec> synthetic;
    std::optional<experts::RemoteExpertConfig> remote;

    static ExpertSource from_synthetic(experts::SyntheticExpertSpec spec);
    static ExpertSource from_remote(experts::RemoteExpertConfig cfg, std::string name);

    /// Predictions over a pair set with the expert's seed replaced by `seed`.
    defer::PredictionMap predict(const std::vector<data::CausalPair>& pairs, std::uint64_t seed) const;
    /// Per-domain correctness probabilities, when known.
    std::optional<DomainMap<double>> domain_probabilities() const;
};

/// Deterministic causal-discovery predictions over every pair of interest.
struct CdSource {
    std::string name;
    defer::PredictionMap predictions;
};

/// Runs a cd method over pairs.
CdSource cd_source(cd::Method method, const std::vector<data::CausalPair>& pairs);

/// Simulated method that is correct with probability `accuracy`, independently per pair.
CdSource noisy_cd_stub(double accuracy, std::uint64_t seed, const std::vector<data::CausalPair>& pairs);

enum class Weighting { Unweighted, MetaWeights };

/// (Weighted) fraction of pairs whose prediction equals the truth.
double accuracy(const std::vector<data::CausalPair>& pairs, const defer::PredictionMap& preds, Weighting w);

struct DeferralObservation {
    int pair_id = 0;
    Domain domain = Domain::Biology;
    std::string cd_name;
    std::uint64_t seed = 0;
    bool deferred = false;
};

struct ComboResult {
    AccuracyRow row;
    std::vector<DeferralObservation> l2d;
    std::vector<DeferralObservation> baseline;
    std::vector<int> s_sizes;  // per training seed
    int empty_s_seeds = 0;     // seeds where CD and expert agreed on all training pairs
};

struct ComboOptions {
    std::vector<std::uint64_t> train_seeds;
    std::vector<std::uint64_t> baseline_seeds;
    Weighting weighting = Weighting::Unweighted;
    features::FeaturizerConfig featurizer;
    defer::ForestHyperparams hp;  // seed overridden per training seed
};

/// Sampling seed of the random baseline for a (training seed, baseline seed) combination.
std::uint64_t baseline_sampling_seed(std::uint64_t train_seed, std::uint64_t baseline_seed);

struct ModelScores {
    double cd_acc = 0.0;
    double expert_acc = 0.0;
    double l2d_acc = 0.0;
    std::vector<double> baseline_acc;  // one per sampling seed
    std::vector<bool> l2d_deferred;    // per test pair
};

/// Scores a fitted model on a test set.
ModelScores score_model(const std::vector<data::CausalPair>& test_pairs, const defer::PredictionMap& cd_preds,
                        const defer::PredictionMap& expert_preds, const defer::DeferralModel& model,
                        std::span<const std::uint64_t> sampling_seeds, Weighting weighting);

/// Accuracy protocol for one (CD, expert) combination: retrain per training seed (expert seed and
/// forest seed both set to it), evaluate on the test pairs, and average over seeds.
ComboResult evaluate_combo(const std::vector<data::CausalPair>& train_pairs,
                           const std::vector<data::CausalPair>& test_pairs, const CdSource& cd,
                           const ExpertSource& expert, const ComboOptions& options);

// ---------------------------------------------------------------------------
// Hyperparameter selection

struct GridPoint {
    defer::ForestHyperparams hp;
    int embed_dim = 50;
};

/// n_estimators x min_samples_split x embedding size, in that nesting order (30 points).
std::vector<GridPoint> default_grid();

struct LooResult {
    std::size_t best_index = 0;
    GridPoint best;
    std::vector<double> scores;  // aggregated LOO loss per grid point
};

/// Leave-one-out selection with the deferral loss; losses averaged per (expert, CD, seed),
/// then per expert type, then across types. Ties resolve to the earliest grid point.
LooResult loo_select(const std::vector<data::CausalPair>& train_pairs, const std::vector<GridPoint>& grid,
                     const std::vector<ExpertSource>& experts, const std::vector<CdSource>& cd_methods,
                     const std::vector<std::uint64_t>& seeds, const features::FeaturizerConfig& featurizer);

/// Mean LOO deferral loss of the disagreement-set training for a single configuration.
double loo_loss(const std::vector<data::CausalPair>& train_pairs, const defer::PredictionMap& cd_preds,
                const defer::PredictionMap& expert_preds, const features::FeaturizerConfig& featurizer,
                const defer::ForestHyperparams& hp);

// ---------------------------------------------------------------------------
// Domain consistency

inline constexpr double kSignificance = 0.05;

/// a, b: deferrals / non-deferrals on the strong domain; c, d: same on the weak domain.
struct ContingencyTable2x2 {
    long a = 0, b = 0, c = 0, d = 0;
};

/// One-sided Fisher exact p-value P(X >= a) under the hypergeometric null.
double fisher_exact_greater(const ContingencyTable2x2& t);

/// Intersection-union p-value: the maximum of the component p-values.
double iut_pvalue(std::span<const double> pvals);

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> bh_adjust(std::span<const double> pvals);

struct ConsistencyReport {
    std::string method;
    std::string expert;
    std::map<std::pair<Domain, Domain>, double> per_pair_pvals;  // (strong, weak) -> p
    std::map<Domain, std::pair<long, long>> counts;             // domain -> (deferred, not deferred)
    double iut_pval = 1.0;
    double corrected_pval = 1.0;
    bool consistent = false;

    nlohmann::json to_json() const;
};

/// Pools observations per domain and tests every strong/weak domain pair. The corrected
/// p-value is provisional (equal to the IUT p-value) until apply_bh runs over all reports.
ConsistencyReport domain_consistency(std::span<const DeferralObservation> observations,
                                     const DomainMap<double>& p_by_domain);

/// Joint Benjamini-Hochberg over the reports' IUT p-values; sets corrected_pval and consistent.
void apply_bh(std::vector<ConsistencyReport>& reports);

}  // namespace l2dcd::eval
