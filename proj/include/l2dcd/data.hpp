#pragma once

#include "l2dcd/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace l2dcd::data {

/// One cause-effect instance. u is the first column ("x"), v the second ("y").
struct CausalPair {
    int id = 0;
    std::string name_u = "x";
    std::string name_v = "y";
    std::vector<double> x_u;
    std::vector<double> x_v;
    std::string description;  // ground-truth-free text
    Domain domain = Domain::Biology;
    Direction truth = Direction::Forward;
    double weight = 1.0;

    std::size_t size() const noexcept { return x_u.size(); }
};

/// Throws MalformedNumeric / EmptyDescription when the pair invariants do not hold.
void validate(const CausalPair& pair);

enum class Split { Train, Test };

struct SplitEntry {
    Domain domain;
    Split split;
};

class SplitTable {
public:
    explicit SplitTable(std::map<int, SplitEntry> entries) : entries_(std::move(entries)) {}

    /// Throws UnknownId for excluded or out-of-range ids.
    const SplitEntry& lookup(int id) const;
    bool contains(int id) const { return entries_.contains(id); }
    const std::map<int, SplitEntry>& entries() const noexcept { return entries_; }

    std::vector<int> ids(Split split) const;
    std::vector<int> ids(Split split, Domain domain) const;

private:
    std::map<int, SplitEntry> entries_;
};

/// Domain and train/test assignment of the 102 univariate Tuebingen pairs.
const SplitTable& split_table();

/// Maximum number of rows kept per pair; longer pairs are stride-subsampled.
inline constexpr std::size_t kMaxRows = 10'000;

struct LoadOptions {
    /// Directory of curated descriptions (`pair%04d_des.txt`) shadowing the originals.
    std::optional<std::filesystem::path> description_overlay;
    /// Metadata file; defaults to `<root>/pairmeta.txt`.
    std::optional<std::filesystem::path> meta_file;
};

/// Row of the benchmark's `pairmeta.txt` (1-based column ranges).
struct PairMeta {
    int id = 0;
    int cause_first = 0;
    int cause_last = 0;
    int effect_first = 0;
    int effect_last = 0;
    double weight = 1.0;
};

std::map<int, PairMeta> read_pair_meta(const std::filesystem::path& meta_file);

CausalPair load_pair(const std::filesystem::path& root_dir, int id, const LoadOptions& options = {});

/// Whitespace-separated two-column numeric file as (first column, second column).
std::pair<std::vector<double>, std::vector<double>> read_two_columns(const std::filesystem::path& path);

/// Loads every id of the split table (in id order).
std::vector<CausalPair> load_all(const std::filesystem::path& root_dir, const LoadOptions& options = {});

enum class Mechanism { LinearNonGaussian, NonlinearANM };

struct SyntheticBenchSpec {
    int n_pairs_per_domain = 20;
    int n_samples = 200;
    Mechanism mechanism = Mechanism::NonlinearANM;
    double noise_scale = 0.1;
    std::uint64_t seed = 0;
};

/// Pairs are emitted domain by domain (Biology first), ids 1..5n.
std::vector<CausalPair> generate_synthetic(const SyntheticBenchSpec& spec);

/// Stratified 50/50 split used for synthetic benchmarks: within each domain,
/// even positions train and odd positions test.
std::pair<std::vector<CausalPair>, std::vector<CausalPair>> stratified_split(
    const std::vector<CausalPair>& pairs);

nlohmann::json to_json(const CausalPair& pair);
CausalPair pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<CausalPair>& pairs);
std::vector<CausalPair> pairs_from_json(const nlohmann::json& j);

std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view text);

}  // namespace l2dcd::data
