#pragma once

#include "l2dcd/data.hpp"
#include "l2dcd/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>

namespace l2dcd::experts {

/// Expert returning the correct direction with probability p_by_domain[d] on domain d.
struct SyntheticExpertSpec {
    std::string name;
    DomainMap<double> p_by_domain{};
    std::uint64_t seed = 0;

    double p(Domain d) const { return p_by_domain[index_of(d)]; }
    /// True when every p is 0 or 1, i.e. predictions do not depend on the seed.
    bool deterministic() const;
};

/// p = 1 - eps on Biology, Economics/Finance, Physics; p = eps on Climate/Environment, Medicine.
SyntheticExpertSpec make_epsilon_expert(double epsilon, std::uint64_t seed = 0);

/// p = 1 on exactly three good domains and 0 elsewhere; named by the initials of the good domains.
SyntheticExpertSpec make_p_expert(const std::set<Domain>& good_domains);
/// Same, from a name such as "BCE".
SyntheticExpertSpec make_p_expert(std::string_view initials);

/// All ten p-experts in name order (BCE, BCM, ..., EMP).
std::vector<SyntheticExpertSpec> all_p_experts();

struct ExpertPrediction {
    int pair_id = 0;
    Direction direction = Direction::Forward;
    std::optional<std::string> raw_answer;
};

ExpertPrediction synthetic_predict(const SyntheticExpertSpec& spec, const data::CausalPair& pair);

inline constexpr std::string_view kSystemPrompt =
    "You will be given a text describing two columns in a dataset. The text will be delimited by "
    "backticks as in a code block. The first column is also referred to as \"x\" and the second column "
    "as \"y\". Based on the text description between backticks, is it more likely that 1) x causes y, "
    "or that 2) y causes x? Please choose one and only one of these two options.";

struct Prompt {
    std::string system;
    std::string user;
};

/// User part: the description between two fences of three backticks, each followed/preceded by two spaces.
Prompt build_prompt(std::string_view description);

/// Option 1 ("x causes y") is Forward, option 2 ("y causes x") Backward.
/// Standalone "1)"/"2)" markers take precedence over the spelled-out phrases.
Direction parse_answer(std::string_view raw);

struct RemoteExpertConfig {
    std::string endpoint_url;
    std::string model_name;
    std::uint64_t seed = 0;
    double timeout_s = 60.0;
    std::filesystem::path cache_dir = "cache/expert";
};

/// Key of the cache entry for a query.
std::string remote_cache_key(const RemoteExpertConfig& cfg, std::string_view description);

/// Chat-completion request body for a description.
nlohmann::json chat_request(const RemoteExpertConfig& cfg, std::string_view description);

ExpertPrediction remote_predict(const RemoteExpertConfig& cfg, const data::CausalPair& pair);

}  // namespace l2dcd::experts
