#pragma once

#include "l2dcd/data.hpp"
#include "l2dcd/error.hpp"
#include "l2dcd/eval.hpp"
#include "l2dcd/features.hpp"
#include "l2dcd/forest.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace l2dcd::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kRemoteError = 4 };

/// Usage for configuration problems, remote for service failures, data for everything else.
int exit_code_for(ErrorKind kind);

struct DataConfig {
    enum class Source { Synthetic, Tuebingen } source = Source::Synthetic;
    data::SyntheticBenchSpec synthetic;
    std::filesystem::path root;
    data::LoadOptions load;
};

struct RunConfig {
    DataConfig data;
    std::vector<eval::ExpertSource> experts;
    std::vector<std::string> cd_methods;  // method names or "stub:<accuracy>"
    std::uint64_t stub_seed = 0;
    features::FeaturizerConfig featurizer;
    defer::ForestHyperparams hp;
    std::vector<std::uint64_t> train_seeds;
    std::vector<std::uint64_t> baseline_seeds;
    eval::Weighting weighting = eval::Weighting::Unweighted;
    std::filesystem::path output_dir = "out";
    std::vector<eval::GridPoint> grid;
    std::vector<std::uint64_t> loo_seeds;
    int jobs = 1;
    nlohmann::json raw;  // the file as parsed, for the manifest
};

/// Parses a config object; relative paths resolve against `base_dir`. Throws InvalidConfig.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads pairs and returns (train, test).
std::pair<std::vector<data::CausalPair>, std::vector<data::CausalPair>> load_data(const DataConfig& cfg);

/// Builds CD predictions for a configured method name over the given pairs.
eval::CdSource make_cd_source(const std::string& name, std::uint64_t stub_seed,
                              const std::vector<data::CausalPair>& pairs);

/// Fixed-precision CSV with one row per (CD, expert) combination.
std::string accuracies_csv(const std::vector<eval::ComboResult>& results);

/// sha256 over every cache entry (sorted by file name), "" when the directory does not exist.
std::string directory_digest(const std::filesystem::path& dir);

int cmd_benchmark(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_pair(const std::string& method, const std::filesystem::path& file, std::ostream& out, std::ostream& err);
int cmd_loo(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_graph(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_fetch(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

/// Entry point behind the `l2dcd` executable.
int run(int argc, char** argv);

}  // namespace l2dcd::cli
