#include "helpers.hpp"

#include "l2dcd/cd.hpp"
#include "l2dcd/data.hpp"

#include <set>

using namespace l2dcd;
using namespace l2dcd::data;
using testutil::TempDir;
using testutil::write_text;

TEST(SplitTable, TrainingCountsPerDomain) {
    const auto& t = split_table();
    EXPECT_EQ(t.ids(Split::Train, Domain::Biology).size(), 7u);
    EXPECT_EQ(t.ids(Split::Train, Domain::ClimateEnvironment).size(), 16u);
    EXPECT_EQ(t.ids(Split::Train, Domain::EconomicsFinance).size(), 11u);
    EXPECT_EQ(t.ids(Split::Train, Domain::Medicine).size(), 8u);
    EXPECT_EQ(t.ids(Split::Train, Domain::Physics).size(), 8u);
    EXPECT_EQ(t.entries().size(), 102u);
}

TEST(SplitTable, Lookups) {
    const auto& t = split_table();
    EXPECT_EQ(t.lookup(8).domain, Domain::Biology);
    EXPECT_EQ(t.lookup(8).split, Split::Test);
    EXPECT_EQ(t.lookup(26).domain, Domain::Physics);
    EXPECT_EQ(t.lookup(26).split, Split::Train);
    EXPECT_ERROR_KIND(t.lookup(71), ErrorKind::UnknownId);
}

TEST(SplitTable, MultivariateIdsAbsentAndPartition) {
    const auto& t = split_table();
    for (int id : {52, 53, 54, 55, 71, 105}) EXPECT_FALSE(t.contains(id)) << id;
    // Every id from 1..108 except the exclusions appears exactly once.
    std::set<int> train, test;
    for (int id : t.ids(Split::Train)) train.insert(id);
    for (int id : t.ids(Split::Test)) test.insert(id);
    for (int id : train) EXPECT_FALSE(test.contains(id));
    EXPECT_EQ(train.size() + test.size(), 102u);
    for (int id = 1; id <= 108; ++id) {
        const bool excluded = id == 71 || id == 105 || (id >= 52 && id <= 55);
        EXPECT_EQ(t.contains(id), !excluded) << id;
    }
}

namespace {

// Pair id 1 is a training pair in the table; 52 is multivariate.
void write_pair_dir(const TempDir& dir, const std::string& numeric, const std::string& meta) {
    write_text(dir / "pair0001.txt", numeric);
    write_text(dir / "pair0001_des.txt", "Two measured quantities.");
    write_text(dir / "pairmeta.txt", meta);
}

}  // namespace

TEST(LoadPair, ThreeRowsForward) {
    TempDir dir("load");
    write_pair_dir(dir, "1.0 2.0\n2.0 4.5\n3.0 6.1\n", "1 1 1 2 2 0.5\n");
    const auto p = load_pair(dir.path(), 1);
    EXPECT_EQ(p.size(), 3u);
    EXPECT_EQ(p.truth, Direction::Forward);
    EXPECT_EQ(p.weight, 0.5);
    EXPECT_EQ(p.domain, split_table().lookup(1).domain);
    EXPECT_EQ(p.x_v[2], 6.1);
    EXPECT_EQ(p.description, "Two measured quantities.");
}

TEST(LoadPair, CauseInSecondColumnIsBackward) {
    TempDir dir("load");
    write_pair_dir(dir, "1 2\n2 4\n", "1 2 2 1 1 1\n");
    EXPECT_EQ(load_pair(dir.path(), 1).truth, Direction::Backward);
}

TEST(LoadPair, Errors) {
    TempDir dir("load");
    write_pair_dir(dir, "1 2\nnan 4\n", "1 1 1 2 2 1\n52 1 2 3 4 1\n");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 1), ErrorKind::MalformedNumeric);
    EXPECT_ERROR_KIND(load_pair(dir.path(), 52), ErrorKind::MultivariatePair);
    EXPECT_ERROR_KIND(load_pair(dir.path(), 2), ErrorKind::UnknownId);

    write_text(dir / "pair0001.txt", "1 2\n3\n");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 1), ErrorKind::MalformedNumeric);
    write_text(dir / "pair0001.txt", "1 2 3\n4 5 6\n");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 1), ErrorKind::MultivariatePair);
    write_text(dir / "pair0001.txt", "1 2\ninf 3\n");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 1), ErrorKind::MalformedNumeric);

    std::filesystem::remove(dir / "pair0001.txt");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 1), ErrorKind::MissingFile);
    EXPECT_ERROR_KIND(load_pair(dir.path() / "nowhere", 1), ErrorKind::MissingFile);
}

TEST(LoadPair, IdOutsideSplitTable) {
    TempDir dir("load");
    write_text(dir / "pairmeta.txt", "109 1 1 2 2 1\n");
    EXPECT_ERROR_KIND(load_pair(dir.path(), 109), ErrorKind::UnknownId);
}

TEST(LoadPair, DescriptionOverlayShadowsOriginal) {
    TempDir dir("load");
    TempDir overlay("overlay");
    write_pair_dir(dir, "1 2\n2 3\n", "1 1 1 2 2 1\n");
    write_text(overlay / "pair0001_des.txt", "Curated text.");
    LoadOptions opts;
    opts.description_overlay = overlay.path();
    EXPECT_EQ(load_pair(dir.path(), 1, opts).description, "Curated text.");
}

TEST(LoadPair, LongPairsAreStrideSubsampled) {
    TempDir dir("load");
    std::string rows;
    for (int i = 0; i < 25000; ++i) rows += std::to_string(i) + " " + std::to_string(2 * i) + "\n";
    write_pair_dir(dir, rows, "1 1 1 2 2 1\n");
    const auto p = load_pair(dir.path(), 1);
    ASSERT_EQ(p.size(), kMaxRows);
    EXPECT_EQ(p.x_u[0], 0.0);
    EXPECT_EQ(p.x_u[1], 2.0);  // 1 * 25000 / 10000
    EXPECT_EQ(p.x_u[9999], 24997.0);
    // Deterministic and side-effect free.
    EXPECT_EQ(load_pair(dir.path(), 1).x_u, p.x_u);
}

TEST(ReadTwoColumns, ParsesAndRejects) {
    TempDir dir("cols");
    write_text(dir / "a.txt", "1 2\n3 4\n\n5 6\n");
    const auto [x, y] = read_two_columns(dir / "a.txt");
    EXPECT_EQ(x, (std::vector<double>{1, 3, 5}));
    EXPECT_EQ(y, (std::vector<double>{2, 4, 6}));
    write_text(dir / "b.txt", "1 2 3\n");
    EXPECT_ERROR_KIND(read_two_columns(dir / "b.txt"), ErrorKind::MultivariatePair);
}

TEST(Synthetic, Cardinality) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 2;
    const auto pairs = generate_synthetic(spec);
    ASSERT_EQ(pairs.size(), 10u);
    DomainMap<int> per{};
    for (const auto& p : pairs) {
        per[index_of(p.domain)]++;
        EXPECT_NO_THROW(validate(p));
        EXPECT_EQ(p.size(), static_cast<std::size_t>(spec.n_samples));
    }
    for (int c : per) EXPECT_EQ(c, 2);
}

TEST(Synthetic, ByteIdenticalAcrossCalls) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 3;
    spec.seed = 99;
    EXPECT_EQ(to_json(generate_synthetic(spec)).dump(), to_json(generate_synthetic(spec)).dump());
    auto other = spec;
    other.seed = 100;
    EXPECT_NE(to_json(generate_synthetic(spec)).dump(), to_json(generate_synthetic(other)).dump());
}

TEST(Synthetic, DescriptionsCarryDomainAndNames) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 2;
    for (const auto& p : generate_synthetic(spec)) {
        std::string domain(display_name(p.domain));
        domain = domain.substr(0, domain.find('/'));
        EXPECT_NE(p.description.find(domain), std::string::npos) << p.description;
        EXPECT_NE(p.description.find(p.name_u), std::string::npos);
        EXPECT_NE(p.description.find(p.name_v), std::string::npos);
        EXPECT_NE(p.name_u, p.name_v);
    }
}

TEST(Synthetic, LinearMechanismSlopeAndNoise) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 4;
    spec.n_samples = 2000;
    spec.mechanism = Mechanism::LinearNonGaussian;
    spec.noise_scale = 0.05;
    for (const auto& p : generate_synthetic(spec)) {
        const auto& cause = p.truth == Direction::Forward ? p.x_u : p.x_v;
        const auto& effect = p.truth == Direction::Forward ? p.x_v : p.x_u;
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < cause.size(); ++i) {
            sxy += cause[i] * effect[i];
            sxx += cause[i] * cause[i];
        }
        const double slope = std::abs(sxy / sxx);
        EXPECT_GE(slope, 0.45);
        EXPECT_LE(slope, 2.05);
    }
}

TEST(Synthetic, InvalidSpec) {
    SyntheticBenchSpec spec;
    spec.n_samples = 5;
    EXPECT_ERROR_KIND(generate_synthetic(spec), ErrorKind::InvalidSpec);
    spec = {};
    spec.n_pairs_per_domain = 0;
    EXPECT_ERROR_KIND(generate_synthetic(spec), ErrorKind::InvalidSpec);
    spec = {};
    spec.noise_scale = 0.0;
    EXPECT_ERROR_KIND(generate_synthetic(spec), ErrorKind::InvalidSpec);
}

TEST(Synthetic, NonlinearSignalIsRecoverableByReci) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 20;
    spec.n_samples = 500;
    int correct = 0;
    const auto pairs = generate_synthetic(spec);
    for (const auto& p : pairs) correct += cd::reci(p.x_u, p.x_v).direction == p.truth;
    EXPECT_GE(correct, 90) << "out of " << pairs.size();
}

TEST(Synthetic, StratifiedSplitAlternatesWithinDomain) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 5;
    const auto [train, test] = stratified_split(generate_synthetic(spec));
    EXPECT_EQ(train.size(), 15u);
    EXPECT_EQ(test.size(), 10u);
    DomainMap<int> per{};
    for (const auto& p : test) per[index_of(p.domain)]++;
    for (int c : per) EXPECT_EQ(c, 2);
}

TEST(Json, PairRoundTrip) {
    SyntheticBenchSpec spec;
    spec.n_pairs_per_domain = 1;
    const auto pairs = generate_synthetic(spec);
    const auto back = pairs_from_json(nlohmann::json::parse(to_json(pairs).dump()));
    ASSERT_EQ(back.size(), pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(back[i].id, pairs[i].id);
        EXPECT_EQ(back[i].x_u, pairs[i].x_u);
        EXPECT_EQ(back[i].x_v, pairs[i].x_v);
        EXPECT_EQ(back[i].truth, pairs[i].truth);
        EXPECT_EQ(back[i].domain, pairs[i].domain);
        EXPECT_EQ(back[i].description, pairs[i].description);
    }
}

TEST(Validate, RejectsBrokenPairs) {
    auto p = testutil::make_pair(1, Domain::Physics, Direction::Forward);
    EXPECT_NO_THROW(validate(p));
    p.description = "";
    EXPECT_ERROR_KIND(validate(p), ErrorKind::EmptyDescription);
    p = testutil::make_pair(1, Domain::Physics, Direction::Forward);
    p.x_v.push_back(1.0);
    EXPECT_ERROR_KIND(validate(p), ErrorKind::MalformedNumeric);
}
