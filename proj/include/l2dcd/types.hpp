#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace l2dcd {

/// Causal direction between the first (u) and second (v) variable of a pair.
/// Forward means u -> v.
enum class Direction { Forward, Backward };

constexpr Direction opposite(Direction d) noexcept {
    return d == Direction::Forward ? Direction::Backward : Direction::Forward;
}

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

/// Ordered so that sorting by enum value sorts by initial (B, C, E, M, P).
enum class Domain { Biology, ClimateEnvironment, EconomicsFinance, Medicine, Physics };

inline constexpr std::size_t kNumDomains = 5;
inline constexpr std::array<Domain, kNumDomains> kAllDomains = {
    Domain::Biology, Domain::ClimateEnvironment, Domain::EconomicsFinance, Domain::Medicine,
    Domain::Physics};

constexpr std::size_t index_of(Domain d) noexcept { return static_cast<std::size_t>(d); }

/// Human readable name, e.g. "Climate/Environment".
std::string_view display_name(Domain d);
/// Single-letter initial used in p-expert names.
char initial(Domain d);
/// Accepts display names, initials, or enum-style names (case-insensitive).
Domain parse_domain(std::string_view text);

/// Per-domain table of values, indexed by Domain.
template <typename T>
using DomainMap = std::array<T, kNumDomains>;

}  // namespace l2dcd
