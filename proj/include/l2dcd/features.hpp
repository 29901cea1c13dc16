#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace l2dcd::features {

using FeatureVector = std::vector<double>;

enum class Kind { RemoteEmbedding, HashedTfidf };

std::string_view to_string(Kind k);
Kind parse_kind(std::string_view text);

struct FeaturizerConfig {
    Kind kind = Kind::HashedTfidf;
    int dim = 50;
    std::string endpoint;    // remote only
    std::string model_name;  // remote only
    double timeout_s = 60.0;
    std::filesystem::path cache_dir = "cache/embedding";
};

/// Throws OutOfRange unless dim >= 2 and the remote fields are set for RemoteEmbedding.
void validate(const FeaturizerConfig& cfg);

/// Full embedding vector for a description as served by the endpoint (cached on disk).
std::vector<double> embed_remote(const FeaturizerConfig& cfg, std::string_view description);

/// First d coordinates, L2-renormalised.
FeatureVector reduce_embedding(std::span<const double> raw, int d);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

/// Hashed TF-IDF with smoothed IDF, log((1 + n) / (1 + df)) + 1, fitted on a corpus.
class TfidfVectorizer {
public:
    explicit TfidfVectorizer(int dim);
    TfidfVectorizer(int dim, std::vector<double> idf);

    void fit(const std::vector<std::string>& corpus);
    /// Throws EmptyDescription when the document has no tokens.
    FeatureVector transform(std::string_view document) const;

    int dim() const noexcept { return dim_; }
    const std::vector<double>& idf() const noexcept { return idf_; }

private:
    int dim_;
    std::vector<double> idf_;
};

std::vector<FeatureVector> hashed_tfidf(const std::vector<std::string>& corpus, int dim);

/// Fitted text featurizer: the configuration plus any corpus-dependent state.
class Featurizer {
public:
    explicit Featurizer(FeaturizerConfig cfg);

    /// Fits corpus statistics (TF-IDF); a no-op for remote embeddings.
    void fit(const std::vector<std::string>& corpus);
    FeatureVector transform(std::string_view description) const;

    const FeaturizerConfig& config() const noexcept { return cfg_; }

    nlohmann::json to_json() const;
    static Featurizer from_json(const nlohmann::json& j);

private:
    FeaturizerConfig cfg_;
    TfidfVectorizer tfidf_;
};

}  // namespace l2dcd::features
