#include "l2dcd/cli.hpp"

#include "l2dcd/cd.hpp"
#include "l2dcd/experts.hpp"
#include "l2dcd/graph.hpp"
#include "l2dcd/remote.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace l2dcd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::InvalidSpec:
        case ErrorKind::EmptyGrid:
        case ErrorKind::WrongCardinality:
            return kUsage;
        case ErrorKind::Transport:
        case ErrorKind::AuthMissing:
        case ErrorKind::Unparseable:
        case ErrorKind::Ambiguous:
            return kRemoteError;
        default:
            return kDataError;
    }
}

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::vector<std::uint64_t> seed_list(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    std::vector<std::uint64_t> out;
    if (v.is_number_integer()) {
        // A count n means seeds 0..n-1.
        for (std::uint64_t i = 0; i < v.get<std::uint64_t>(); ++i) out.push_back(i);
    } else {
        out = v.get<std::vector<std::uint64_t>>();
    }
    return out;
}

features::FeaturizerConfig parse_featurizer(const json& j, const fs::path& base) {
    features::FeaturizerConfig cfg;
    if (j.is_null()) return cfg;
    cfg.kind = features::parse_kind(j.value("kind", std::string(features::to_string(cfg.kind))));
    cfg.dim = j.value("dim", cfg.dim);
    cfg.endpoint = j.value("endpoint", "");
    cfg.model_name = j.value("model", "");
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    cfg.cache_dir = resolve(base, j.value("cache_dir", cfg.cache_dir.string()));
    features::validate(cfg);
    return cfg;
}

defer::ForestHyperparams parse_forest(const json& j) {
    defer::ForestHyperparams hp;
    if (j.is_null()) return hp;
    hp.n_trees = j.value("n_trees", hp.n_trees);
    hp.min_samples_split = j.value("min_samples_split", hp.min_samples_split);
    hp.max_features = defer::parse_max_features(j.value("max_features", std::string(defer::to_string(hp.max_features))));
    defer::validate(hp);
    return hp;
}

void parse_experts(const json& list, const fs::path& base, std::vector<eval::ExpertSource>& out) {
    for (const auto& e : list) {
        const auto type = e.at("type").get<std::string>();
        if (type == "epsilon") {
            out.push_back(eval::ExpertSource::from_synthetic(experts::make_epsilon_expert(e.at("epsilon").get<double>())));
        } else if (type == "p") {
            const auto domains = e.at("domains").get<std::string>();
            if (domains == "all") {
                for (auto& spec : experts::all_p_experts()) out.push_back(eval::ExpertSource::from_synthetic(spec));
            } else {
                out.push_back(eval::ExpertSource::from_synthetic(experts::make_p_expert(domains)));
            }
        } else if (type == "remote") {
            experts::RemoteExpertConfig rc;
            rc.endpoint_url = e.at("endpoint").get<std::string>();
            rc.model_name = e.at("model").get<std::string>();
            rc.timeout_s = e.value("timeout_s", rc.timeout_s);
            rc.cache_dir = resolve(base, e.value("cache_dir", rc.cache_dir.string()));
            out.push_back(eval::ExpertSource::from_remote(rc, e.value("name", rc.model_name)));
        } else {
            bad_config("unknown expert type '" + type + "'");
        }
    }
}

std::vector<eval::GridPoint> parse_grid(const json& j) {
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "default")) return eval::default_grid();
    std::vector<eval::GridPoint> grid;
    for (const auto& g : j) {
        eval::GridPoint p;
        p.hp.n_trees = g.at("n_trees").get<int>();
        p.hp.min_samples_split = g.at("min_samples_split").get<int>();
        p.embed_dim = g.at("embed_dim").get<int>();
        defer::validate(p.hp);
        grid.push_back(p);
    }
    return grid;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
    out << content;
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename F>
void parallel_for(std::size_t n, int jobs, F body) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        threads.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string fixed(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

/// Maps module errors to an exit code and a one-line message.
template <typename F>
int guarded(std::ostream& err, F body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "error [InvalidConfig]: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
    RunConfig cfg;
    cfg.raw = j;
    try {
        const auto& d = j.at("data");
        const auto source = d.value("source", std::string("synthetic"));
        if (source == "synthetic") {
            auto& s = cfg.data.synthetic;
            s.n_pairs_per_domain = d.value("n_pairs_per_domain", s.n_pairs_per_domain);
            s.n_samples = d.value("n_samples", s.n_samples);
            s.mechanism = data::parse_mechanism(d.value("mechanism", std::string(data::to_string(s.mechanism))));
            s.noise_scale = d.value("noise_scale", s.noise_scale);
            s.seed = d.value("seed", s.seed);
        } else if (source == "tuebingen") {
            cfg.data.source = DataConfig::Source::Tuebingen;
            cfg.data.root = resolve(base_dir, d.at("root").get<std::string>());
            if (d.contains("description_overlay"))
                cfg.data.load.description_overlay = resolve(base_dir, d.at("description_overlay").get<std::string>());
            if (d.contains("meta_file")) cfg.data.load.meta_file = resolve(base_dir, d.at("meta_file").get<std::string>());
        } else {
            bad_config("data.source must be 'synthetic' or 'tuebingen'");
        }

        parse_experts(j.value("experts", json::array()), base_dir, cfg.experts);
        cfg.cd_methods = j.value("cd_methods", std::vector<std::string>{});
        cfg.stub_seed = j.value("stub_seed", cfg.stub_seed);
        cfg.featurizer = parse_featurizer(j.value("featurizer", json()), base_dir);
        cfg.hp = parse_forest(j.value("forest", json()));
        cfg.train_seeds = seed_list(j, "train_seeds");
        cfg.baseline_seeds = seed_list(j, "baseline_seeds");
        const auto weighting = j.value("weighting", std::string("unweighted"));
        if (weighting == "meta") cfg.weighting = eval::Weighting::MetaWeights;
        else if (weighting != "unweighted") bad_config("weighting must be 'unweighted' or 'meta'");
        cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
        const auto loo = j.value("loo", json::object());
        cfg.grid = parse_grid(loo.value("grid", json()));
        cfg.loo_seeds = seed_list(loo, "seeds");
        if (cfg.loo_seeds.empty()) cfg.loo_seeds = cfg.train_seeds;
        cfg.jobs = j.value("jobs", 1);
    } catch (const json::exception& e) {
        bad_config(std::string("config: ") + e.what());
    }

    if (cfg.experts.empty()) bad_config("config lists no experts");
    if (cfg.cd_methods.empty()) bad_config("config lists no cd_methods");
    if (cfg.train_seeds.empty()) bad_config("train_seeds must be non-empty");
    if (cfg.baseline_seeds.empty()) bad_config("baseline_seeds must be non-empty");
    if (cfg.jobs < 1) bad_config("jobs must be at least 1");
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    return parse_run_config(parse_json_file(path), path.parent_path());
}

std::pair<std::vector<data::CausalPair>, std::vector<data::CausalPair>> load_data(const DataConfig& cfg) {
    if (cfg.source == DataConfig::Source::Synthetic) return data::stratified_split(data::generate_synthetic(cfg.synthetic));
    std::pair<std::vector<data::CausalPair>, std::vector<data::CausalPair>> out;
    const auto& table = data::split_table();
    for (auto& p : data::load_all(cfg.root, cfg.load))
        (table.lookup(p.id).split == data::Split::Train ? out.first : out.second).push_back(std::move(p));
    return out;
}

eval::CdSource make_cd_source(const std::string& name, std::uint64_t stub_seed,
                              const std::vector<data::CausalPair>& pairs) {
    if (name.rfind("stub:", 0) == 0) {
        double accuracy = 0.0;
        try {
            accuracy = std::stod(name.substr(5));
        } catch (const std::exception&) {
            bad_config("bad stub accuracy in '" + name + "'");
        }
        auto src = eval::noisy_cd_stub(accuracy, stub_seed, pairs);
        src.name = name;
        return src;
    }
    return eval::cd_source(cd::parse_method(name), pairs);
}

std::string accuracies_csv(const std::vector<eval::ComboResult>& results) {
    std::ostringstream out;
    out << "cd,expert,cd_acc,cd_se,expert_acc,expert_se,l2d_acc,l2d_se,baseline_acc,baseline_se,n_seeds,mean_s_size\n";
    for (const auto& r : results) {
        const auto& row = r.row;
        double s_mean = 0.0;
        for (int s : r.s_sizes) s_mean += s;
        if (!r.s_sizes.empty()) s_mean /= static_cast<double>(r.s_sizes.size());
        out << row.cd_name << ',' << row.expert_name << ',' << fixed(row.cd_acc.mean) << ',' << fixed(row.cd_acc.se)
            << ',' << fixed(row.expert_acc.mean) << ',' << fixed(row.expert_acc.se) << ',' << fixed(row.l2d_acc.mean)
            << ',' << fixed(row.l2d_acc.se) << ',' << fixed(row.baseline_acc.mean) << ','
            << fixed(row.baseline_acc.se) << ',' << row.n_seeds << ',' << fixed(s_mean, 2) << '\n';
    }
    return out.str();
}

std::string directory_digest(const fs::path& dir) {
    if (!fs::is_directory(dir)) return "";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.filename().string() + "\n" + remote::sha256_hex(read_file(f)) + "\n";
    return remote::sha256_hex(all);
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto [train, test] = load_data(cfg.data);
        std::vector<data::CausalPair> all = train;
        all.insert(all.end(), test.begin(), test.end());

        std::vector<eval::CdSource> cds(cfg.cd_methods.size());
        parallel_for(cds.size(), cfg.jobs,
                     [&](std::size_t i) { cds[i] = make_cd_source(cfg.cd_methods[i], cfg.stub_seed, all); });

        eval::ComboOptions options;
        options.train_seeds = cfg.train_seeds;
        options.baseline_seeds = cfg.baseline_seeds;
        options.weighting = cfg.weighting;
        options.featurizer = cfg.featurizer;
        options.hp = cfg.hp;

        const std::size_t n_experts = cfg.experts.size();
        std::vector<eval::ComboResult> results(cds.size() * n_experts);
        parallel_for(results.size(), cfg.jobs, [&](std::size_t k) {
            results[k] = eval::evaluate_combo(train, test, cds[k / n_experts], cfg.experts[k % n_experts], options);
        });
        for (const auto& r : results)
            if (r.empty_s_seeds > 0)
                err << "warning: " << r.row.cd_name << " x " << r.row.expert_name << ": empty disagreement set for "
                    << r.empty_s_seeds << " seed(s); always deferring to the CD method there\n";

        // Domain consistency, pooled over CD methods, for experts with a known strong/weak split.
        std::vector<eval::ConsistencyReport> reports;
        for (std::size_t e = 0; e < n_experts; ++e) {
            const auto probs = cfg.experts[e].domain_probabilities();
            if (!probs) continue;
            std::vector<eval::DeferralObservation> l2d, baseline;
            for (std::size_t c = 0; c < cds.size(); ++c) {
                const auto& r = results[c * n_experts + e];
                l2d.insert(l2d.end(), r.l2d.begin(), r.l2d.end());
                baseline.insert(baseline.end(), r.baseline.begin(), r.baseline.end());
            }
            try {
                auto a = eval::domain_consistency(l2d, *probs);
                a.method = "l2d";
                a.expert = cfg.experts[e].name;
                auto b = eval::domain_consistency(baseline, *probs);
                b.method = "baseline";
                b.expert = cfg.experts[e].name;
                reports.push_back(std::move(a));
                reports.push_back(std::move(b));
            } catch (const Error& ex) {
                if (ex.kind() != ErrorKind::EmptyDomain) throw;
                err << "warning: consistency skipped for " << cfg.experts[e].name << ": " << ex.what() << "\n";
            }
        }
        if (!reports.empty()) eval::apply_bh(reports);

        fs::create_directories(cfg.output_dir);
        write_file(cfg.output_dir / "accuracies.csv", accuracies_csv(results));
        json consistency = {{"significance", eval::kSignificance}, {"correction", "benjamini-hochberg"}, {"reports", json::array()}};
        for (const auto& r : reports) consistency["reports"].push_back(r.to_json());
        write_file(cfg.output_dir / "consistency.json", consistency.dump(2) + "\n");

        json caches = json::object();
        for (const auto& e : cfg.experts)
            if (e.remote) caches[e.remote->cache_dir.string()] = directory_digest(e.remote->cache_dir);
        if (cfg.featurizer.kind == features::Kind::RemoteEmbedding)
            caches[cfg.featurizer.cache_dir.string()] = directory_digest(cfg.featurizer.cache_dir);
        json train_ids = json::array(), test_ids = json::array();
        for (const auto& p : train) train_ids.push_back(p.id);
        for (const auto& p : test) test_ids.push_back(p.id);
        const json manifest = {{"tool", "l2dcd"},
                               {"version", kVersion},
                               {"command", "benchmark"},
                               {"config_sha256", remote::sha256_hex(cfg.raw.dump())},
                               {"config", cfg.raw},
                               {"train_seeds", cfg.train_seeds},
                               {"baseline_seeds", cfg.baseline_seeds},
                               {"train_ids", train_ids},
                               {"test_ids", test_ids},
                               {"cache_digests", caches}};
        write_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");

        out << json{{"output_dir", cfg.output_dir.string()},
                    {"rows", results.size()},
                    {"consistency_reports", reports.size()}}
                   .dump()
            << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_pair(const std::string& method, const fs::path& file, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto m = cd::parse_method(method);
        const auto [x, y] = data::read_two_columns(file);
        const auto r = cd::run(m, x, y);
        out << json{{"method", std::string(cd::to_string(m))},
                    {"direction", std::string(to_string(r.direction))},
                    {"score", r.score}}
                   .dump()
            << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_loo(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto train = load_data(cfg.data).first;
        std::vector<eval::CdSource> cds;
        for (const auto& name : cfg.cd_methods) cds.push_back(make_cd_source(name, cfg.stub_seed, train));
        const auto result = eval::loo_select(train, cfg.grid, cfg.experts, cds, cfg.loo_seeds, cfg.featurizer);
        out << json{{"best_index", result.best_index},
                    {"n_trees", result.best.hp.n_trees},
                    {"min_samples_split", result.best.hp.min_samples_split},
                    {"embed_dim", result.best.embed_dim},
                    {"scores", result.scores}}
                   .dump()
            << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_graph(const fs::path& config_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const json j = parse_json_file(config_path);
        const fs::path base = config_path.parent_path();
        const auto g = graph::load_graph(resolve(base, j.at("graph").get<std::string>()));
        const auto cd_oracle = graph::cd_ancestry_oracle(cd::parse_method(j.value("cd_method", std::string("reci"))));

        std::vector<graph::LabeledGraph> train;
        for (const auto& p : j.value("train_graphs", std::vector<std::string>{}))
            train.push_back(graph::load_graph(resolve(base, p)));

        graph::AncestryOracle expert = cd_oracle;
        if (j.contains("expert")) {
            const auto& e = j.at("expert");
            if (e.at("type").get<std::string>() != "simulated") bad_config("graph expert type must be 'simulated'");
            auto known = train;
            known.push_back(g);
            expert = graph::simulated_oracle(known, e.at("accuracy").get<double>(), e.value("seed", 0ULL));
        }
        const auto featurizer = parse_featurizer(j.value("featurizer", json()), base);
        const auto hp = parse_forest(j.value("forest", json()));

        defer::DeferralModel model = defer::always_cd_model({}, featurizer, hp);
        if (!train.empty() && j.contains("expert")) {
            try {
                model = graph::train_graph_deferral(train, cd_oracle, expert, featurizer, hp);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyS) throw;
                err << "warning: empty disagreement set; always using the CD method\n";
            }
        }
        const auto ranking = graph::infer_order(g.nodes, g.context, g.data, model, cd_oracle, expert);
        json result = {{"order", ranking.order}};
        if (!g.edges.empty()) result["violation_rate"] = graph::violation_rate(ranking, graph::ancestry_matrix(g));
        out << result.dump() << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_fetch(const fs::path& config_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const json j = parse_json_file(config_path).at("fetch");
        std::string base_url = j.at("base_url").get<std::string>();
        if (base_url.empty() || base_url.back() != '/') base_url += '/';
        const fs::path dest = resolve(config_path.parent_path(), j.value("dest", std::string("data/tuebingen")));
        const double timeout = j.value("timeout_s", 60.0);
        std::vector<int> ids = data::split_table().ids(data::Split::Train);
        const auto test_ids = data::split_table().ids(data::Split::Test);
        ids.insert(ids.end(), test_ids.begin(), test_ids.end());
        std::sort(ids.begin(), ids.end());
        if (j.contains("ids")) ids = j.at("ids").get<std::vector<int>>();

        std::vector<std::string> names = {"pairmeta.txt"};
        for (int id : ids) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "pair%04d", id);
            names.push_back(std::string(buf) + ".txt");
            names.push_back(std::string(buf) + "_des.txt");
        }
        fs::create_directories(dest);
        int downloaded = 0, skipped = 0;
        for (const auto& name : names) {
            if (fs::exists(dest / name)) {
                ++skipped;
                continue;
            }
            const auto res = remote::get(base_url + name, timeout);
            if (!res.ok()) throw Error(ErrorKind::Transport, name + ": " + res.error);
            write_file(dest / name, res.body);
            ++downloaded;
        }
        out << json{{"dest", dest.string()}, {"downloaded", downloaded}, {"skipped", skipped}}.dump() << "\n";
        return static_cast<int>(kOk);
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Learning to defer between causal discovery and an expert"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config;
    int jobs = 0;
    std::string output_dir;

    auto* bench = app.add_subcommand("benchmark", "Run the accuracy and consistency experiment");
    bench->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    bench->add_option("--jobs", jobs, "Parallel (CD, expert) combinations")->check(CLI::PositiveNumber);
    bench->add_option("--output-dir", output_dir, "Overrides output_dir from the config");

    std::string method, file;
    auto* pair = app.add_subcommand("pair", "Run one causal-discovery method on a two-column file");
    pair->add_option("method", method, "reci | pair_lingam | bqcd_lite")->required();
    pair->add_option("file", file, "Whitespace-separated two-column data")->required();

    auto* loo = app.add_subcommand("loo", "Leave-one-out hyperparameter selection");
    loo->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    loo->add_option("--jobs", jobs, "Accepted for symmetry; selection runs serially")->check(CLI::PositiveNumber);

    auto* graph_cmd = app.add_subcommand("graph", "Rank the nodes of a graph by deferred pairwise ancestry");
    graph_cmd->add_option("--config", config, "JSON graph configuration")->required()->check(CLI::ExistingFile);

    auto* fetch = app.add_subcommand("fetch", "Download the benchmark pair files");
    fetch->add_option("--config", config, "JSON file with a 'fetch' section")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto load = [&](RunConfig& cfg) -> int {
        return guarded(std::cerr, [&] {
            cfg = load_run_config(config);
            if (jobs > 0) cfg.jobs = jobs;
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            return static_cast<int>(kOk);
        });
    };

    if (*bench) {
        RunConfig cfg;
        if (int rc = load(cfg); rc != kOk) return rc;
        return cmd_benchmark(cfg, std::cout, std::cerr);
    }
    if (*pair) return cmd_pair(method, file, std::cout, std::cerr);
    if (*loo) {
        RunConfig cfg;
        if (int rc = load(cfg); rc != kOk) return rc;
        return cmd_loo(cfg, std::cout, std::cerr);
    }
    if (*graph_cmd) return cmd_graph(config, std::cout, std::cerr);
    if (*fetch) return cmd_fetch(config, std::cout, std::cerr);
    return kUsage;
}

}  // namespace l2dcd::cli
