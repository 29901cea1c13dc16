#include "l2dcd/features.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/remote.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace l2dcd::features {

std::string_view to_string(Kind k) { return k == Kind::RemoteEmbedding ? "remote_embedding" : "hashed_tfidf"; }

Kind parse_kind(std::string_view text) {
    if (text == "remote_embedding" || text == "remote") return Kind::RemoteEmbedding;
    if (text == "hashed_tfidf" || text == "tfidf") return Kind::HashedTfidf;
    throw Error(ErrorKind::InvalidConfig, "unknown featurizer kind '" + std::string(text) + "'");
}

void validate(const FeaturizerConfig& cfg) {
    if (cfg.dim < 2) throw Error(ErrorKind::OutOfRange, "feature dimension must be at least 2");
    if (cfg.kind == Kind::RemoteEmbedding && (cfg.endpoint.empty() || cfg.model_name.empty()))
        throw Error(ErrorKind::InvalidConfig, "remote embedding needs endpoint and model_name");
}

namespace {

void l2_normalize(FeatureVector& v) {
    double ss = 0.0;
    for (double e : v) ss += e * e;
    const double norm = std::sqrt(ss);
    for (double& e : v) e /= norm;
}

bool blank(std::string_view text) { return text.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

std::vector<double> embed_remote(const FeaturizerConfig& cfg, std::string_view description) {
    if (blank(description)) throw Error(ErrorKind::EmptyDescription, "cannot embed an empty description");
    std::string material = "embedding\n" + cfg.model_name + '\n';
    material.append(description);
    const std::string key = remote::sha256_hex(material);
    const remote::ContentCache cache(cfg.cache_dir);
    if (auto hit = cache.get(key); hit && hit->contains("embedding"))
        return hit->at("embedding").get<std::vector<double>>();

    const auto token = remote::api_key();
    if (!token) throw Error(ErrorKind::AuthMissing, std::string(remote::kApiKeyEnv) + " is not set and the query is not cached");

    const nlohmann::json request = {{"model", cfg.model_name}, {"input", std::string(description)}};
    const auto res = remote::post_json(cfg.endpoint, request, *token, cfg.timeout_s);
    if (!res.ok()) throw Error(ErrorKind::Transport, cfg.endpoint + ": " + res.error);
    std::vector<double> embedding;
    try {
        embedding = nlohmann::json::parse(res.body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Transport, std::string("malformed embedding response: ") + e.what());
    }
    cache.put(key, {{"request_hash", key}, {"model", cfg.model_name}, {"embedding", embedding}});
    return embedding;
}

FeatureVector reduce_embedding(std::span<const double> raw, int d) {
    if (d < 1 || static_cast<std::size_t>(d) > raw.size())
        throw Error(ErrorKind::OutOfRange, "cannot truncate " + std::to_string(raw.size()) + " coordinates to " +
                                               std::to_string(d));
    FeatureVector out(raw.begin(), raw.begin() + d);
    if (std::all_of(out.begin(), out.end(), [](double v) { return v == 0.0; }))
        throw Error(ErrorKind::DegenerateTruncation, "first " + std::to_string(d) + " coordinates are zero");
    l2_normalize(out);
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TfidfVectorizer::TfidfVectorizer(int dim) : dim_(dim), idf_(static_cast<std::size_t>(std::max(dim, 0)), 1.0) {
    if (dim < 2) throw Error(ErrorKind::OutOfRange, "feature dimension must be at least 2");
}

TfidfVectorizer::TfidfVectorizer(int dim, std::vector<double> idf) : dim_(dim), idf_(std::move(idf)) {
    if (dim < 2 || idf_.size() != static_cast<std::size_t>(dim))
        throw Error(ErrorKind::OutOfRange, "IDF table does not match the dimension");
}

void TfidfVectorizer::fit(const std::vector<std::string>& corpus) {
    if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "TF-IDF needs at least one document");
    std::vector<double> df(idf_.size(), 0.0);
    for (const auto& doc : corpus) {
        std::set<std::size_t> buckets;
        for (const auto& tok : tokenize(doc)) buckets.insert(fnv1a64(tok) % static_cast<std::uint64_t>(dim_));
        for (auto b : buckets) df[b] += 1.0;
    }
    const double n = static_cast<double>(corpus.size());
    for (std::size_t b = 0; b < idf_.size(); ++b) idf_[b] = std::log((1.0 + n) / (1.0 + df[b])) + 1.0;
}

FeatureVector TfidfVectorizer::transform(std::string_view document) const {
    FeatureVector v(idf_.size(), 0.0);
    const auto tokens = tokenize(document);
    if (tokens.empty()) throw Error(ErrorKind::EmptyDescription, "document has no tokens");
    for (const auto& tok : tokens) v[fnv1a64(tok) % static_cast<std::uint64_t>(dim_)] += 1.0;
    for (std::size_t b = 0; b < v.size(); ++b) v[b] *= idf_[b];
    l2_normalize(v);
    return v;
}

std::vector<FeatureVector> hashed_tfidf(const std::vector<std::string>& corpus, int dim) {
    TfidfVectorizer vec(dim);
    vec.fit(corpus);
    std::vector<FeatureVector> out;
    out.reserve(corpus.size());
    for (const auto& doc : corpus) out.push_back(vec.transform(doc));
    return out;
}

// ---------------------------------------------------------------------------

Featurizer::Featurizer(FeaturizerConfig cfg) : cfg_(std::move(cfg)), tfidf_((validate(cfg_), cfg_.dim)) {}

void Featurizer::fit(const std::vector<std::string>& corpus) {
    if (cfg_.kind == Kind::HashedTfidf) tfidf_.fit(corpus);
}

FeatureVector Featurizer::transform(std::string_view description) const {
    if (cfg_.kind == Kind::HashedTfidf) return tfidf_.transform(description);
    return reduce_embedding(embed_remote(cfg_, description), cfg_.dim);
}

nlohmann::json Featurizer::to_json() const {
    nlohmann::json j = {{"kind", std::string(to_string(cfg_.kind))}, {"dim", cfg_.dim}};
    if (cfg_.kind == Kind::HashedTfidf) {
        j["idf"] = tfidf_.idf();
    } else {
        j["endpoint"] = cfg_.endpoint;
        j["model_name"] = cfg_.model_name;
        j["cache_dir"] = cfg_.cache_dir.string();
        j["timeout_s"] = cfg_.timeout_s;
    }
    return j;
}

Featurizer Featurizer::from_json(const nlohmann::json& j) {
    FeaturizerConfig cfg;
    cfg.kind = parse_kind(j.at("kind").get<std::string>());
    cfg.dim = j.at("dim").get<int>();
    if (cfg.kind == Kind::RemoteEmbedding) {
        cfg.endpoint = j.at("endpoint").get<std::string>();
        cfg.model_name = j.at("model_name").get<std::string>();
        cfg.cache_dir = j.value("cache_dir", std::string("cache/embedding"));
        cfg.timeout_s = j.value("timeout_s", 60.0);
    }
    Featurizer f(cfg);
    if (cfg.kind == Kind::HashedTfidf) f.tfidf_ = TfidfVectorizer(cfg.dim, j.at("idf").get<std::vector<double>>());
    return f;
}

}  // namespace l2dcd::features
