#include "fixture_server.hpp"
#include "helpers.hpp"

#include "l2dcd/features.hpp"
#include "l2dcd/remote.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace l2dcd;
using namespace l2dcd::features;
using testutil::EnvGuard;
using testutil::FixtureServer;
using testutil::TempDir;

namespace {

double norm(const FeatureVector& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

double dot(const FeatureVector& a, const FeatureVector& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

std::vector<std::string> fixture_corpus() {
    std::istringstream in(testutil::read_text(testutil::kFixtures / "tfidf_corpus.txt"));
    std::vector<std::string> docs;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) docs.push_back(line);
    return docs;
}

}  // namespace

TEST(ReduceEmbedding, Examples) {
    const auto v = reduce_embedding(std::vector<double>{3, 4, 0, 0}, 2);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0], 0.6, 1e-15);
    EXPECT_NEAR(v[1], 0.8, 1e-15);

    const std::vector<double> unit = {0.6, 0.0, 0.8};
    const auto same = reduce_embedding(unit, 3);
    for (std::size_t i = 0; i < unit.size(); ++i) EXPECT_NEAR(same[i], unit[i], 1e-15);

    EXPECT_ERROR_KIND(reduce_embedding(std::vector<double>{0, 0, 5}, 2), ErrorKind::DegenerateTruncation);
    EXPECT_ERROR_KIND(reduce_embedding(std::vector<double>{1, 2}, 3), ErrorKind::OutOfRange);
}

TEST(ReduceEmbedding, IdempotentAndUnitNorm) {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> raw(20);
        for (auto& x : raw) x = rng.normal();
        const int d = 2 + static_cast<int>(rng.below(19));
        const auto once = reduce_embedding(raw, d);
        const auto twice = reduce_embedding(once, d);
        EXPECT_NEAR(norm(once), 1.0, 1e-9);
        for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-15);
    }
}

TEST(Fnv1a, GoldenHashes) {
    const auto golden = nlohmann::json::parse(testutil::read_text(testutil::kGolden / "tfidf_dim16.json"));
    for (const auto& [word, hash] : golden.at("fnv1a64").items())
        EXPECT_EQ(std::to_string(fnv1a64(word)), hash.get<std::string>()) << word;
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
}

TEST(Tokenize, LowercasesAndSplits) {
    EXPECT_EQ(tokenize("Air-Temp (degC), 2nd_reading!"),
              (std::vector<std::string>{"air", "temp", "degc", "2nd", "reading"}));
    EXPECT_TRUE(tokenize(" ,;- ").empty());
}

TEST(HashedTfidf, MatchesGoldenVectors) {
    const auto golden = nlohmann::json::parse(testutil::read_text(testutil::kGolden / "tfidf_dim16.json"));
    const int dim = golden.at("dim").get<int>();
    const auto corpus = fixture_corpus();
    TfidfVectorizer vec(dim);
    vec.fit(corpus);
    const auto idf = golden.at("idf").get<std::vector<double>>();
    for (int b = 0; b < dim; ++b) EXPECT_NEAR(vec.idf()[static_cast<std::size_t>(b)], idf[static_cast<std::size_t>(b)], 1e-12);
    const auto vectors = hashed_tfidf(corpus, dim);
    const auto expected = golden.at("vectors").get<std::vector<std::vector<double>>>();
    ASSERT_EQ(vectors.size(), expected.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (int b = 0; b < dim; ++b)
            EXPECT_NEAR(vectors[i][static_cast<std::size_t>(b)], expected[i][static_cast<std::size_t>(b)], 1e-12);
}

TEST(HashedTfidf, IdenticalDocumentsIdenticalVectors) {
    const auto v = hashed_tfidf({"the same text", "the same text", "other words"}, 32);
    EXPECT_EQ(v[0], v[1]);
}

TEST(HashedTfidf, DisjointDocumentsOrthogonalWithoutCollisions) {
    const auto corpus = fixture_corpus();
    constexpr int dim = 1 << 16;
    // Collision check: distinct tokens of the fixture occupy distinct buckets.
    std::set<std::string> vocabulary;
    for (const auto& d : corpus)
        for (const auto& t : tokenize(d)) vocabulary.insert(t);
    std::set<std::uint64_t> buckets;
    for (const auto& t : vocabulary) buckets.insert(fnv1a64(t) % dim);
    ASSERT_EQ(buckets.size(), vocabulary.size());
    for (const auto& d : corpus) ASSERT_LE(tokenize(d).size(), 50u);

    const auto v = hashed_tfidf(corpus, dim);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto ti = tokenize(corpus[i]);
        const std::set<std::string> si(ti.begin(), ti.end());
        for (std::size_t j = i + 1; j < corpus.size(); ++j) {
            const auto tj = tokenize(corpus[j]);
            const bool shared = std::any_of(tj.begin(), tj.end(), [&](const std::string& t) { return si.contains(t); });
            if (!shared) EXPECT_EQ(dot(v[i], v[j]), 0.0) << i << "," << j;
            else EXPECT_GT(dot(v[i], v[j]), 0.0);
        }
    }
}

TEST(HashedTfidf, UnitNormAndDocumentOrderInvariance) {
    auto corpus = fixture_corpus();
    const auto v = hashed_tfidf(corpus, 50);
    for (const auto& x : v) {
        EXPECT_EQ(x.size(), 50u);
        EXPECT_NEAR(norm(x), 1.0, 1e-9);
    }
    std::reverse(corpus.begin(), corpus.end());
    const auto r = hashed_tfidf(corpus, 50);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], r[v.size() - 1 - i]);
}

TEST(HashedTfidf, Errors) {
    EXPECT_ERROR_KIND(hashed_tfidf({}, 16), ErrorKind::EmptyCorpus);
    EXPECT_ERROR_KIND(hashed_tfidf({"ok", "..."}, 16), ErrorKind::EmptyDescription);
    EXPECT_ERROR_KIND(TfidfVectorizer(1), ErrorKind::OutOfRange);
}

TEST(Featurizer, JsonRoundTripPreservesTransform) {
    Featurizer f(FeaturizerConfig{});
    f.fit(fixture_corpus());
    const auto back = Featurizer::from_json(nlohmann::json::parse(f.to_json().dump()));
    EXPECT_EQ(back.config().dim, 50);
    EXPECT_EQ(back.transform("rainfall at the coast"), f.transform("rainfall at the coast"));
}

TEST(Featurizer, ConfigValidation) {
    FeaturizerConfig cfg;
    cfg.dim = 1;
    EXPECT_ERROR_KIND(validate(cfg), ErrorKind::OutOfRange);
    cfg.dim = 5;
    cfg.kind = Kind::RemoteEmbedding;
    EXPECT_ERROR_KIND(validate(cfg), ErrorKind::InvalidConfig);
}

TEST(EmbedRemote, FixturePassthroughAndCache) {
    FixtureServer fx;
    nlohmann::json seen;
    fx.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        ++fx.hits;
        seen = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"data", {{{"embedding", {3, 4}}}}}}.dump(), "application/json");
    });
    fx.start();
    TempDir cache("embed_cache");
    EnvGuard key(remote::kApiKeyEnv, "k");

    FeaturizerConfig cfg;
    cfg.kind = Kind::RemoteEmbedding;
    cfg.dim = 2;
    cfg.endpoint = fx.url("/v1/embeddings");
    cfg.model_name = "embedder";
    cfg.cache_dir = cache.path();
    EXPECT_EQ(embed_remote(cfg, "some text"), (std::vector<double>{3, 4}));
    EXPECT_EQ(seen.at("model"), "embedder");
    EXPECT_EQ(seen.at("input"), "some text");
    EXPECT_EQ(embed_remote(cfg, "some text"), (std::vector<double>{3, 4}));
    EXPECT_EQ(fx.hits.load(), 1);

    Featurizer f(cfg);
    const auto v = f.transform("some text");
    EXPECT_NEAR(v[0], 0.6, 1e-15);
    EXPECT_NEAR(v[1], 0.8, 1e-15);
    EXPECT_EQ(fx.hits.load(), 1);

    EXPECT_ERROR_KIND(embed_remote(cfg, ""), ErrorKind::EmptyDescription);
    EnvGuard no_key(remote::kApiKeyEnv, nullptr);
    EXPECT_ERROR_KIND(embed_remote(cfg, "uncached text"), ErrorKind::AuthMissing);
}
