#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"
#include "l2dcd/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace l2dcd {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::MalformedNumeric: return "MalformedNumeric";
        case ErrorKind::MultivariatePair: return "MultivariatePair";
        case ErrorKind::UnknownId: return "UnknownId";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InvalidQuantile: return "InvalidQuantile";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::WrongCardinality: return "WrongCardinality";
        case ErrorKind::EmptyDescription: return "EmptyDescription";
        case ErrorKind::Unparseable: return "Unparseable";
        case ErrorKind::Ambiguous: return "Ambiguous";
        case ErrorKind::Transport: return "Transport";
        case ErrorKind::AuthMissing: return "AuthMissing";
        case ErrorKind::DegenerateTruncation: return "DegenerateTruncation";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::KeyMismatch: return "KeyMismatch";
        case ErrorKind::EmptyTraining: return "EmptyTraining";
        case ErrorKind::EmptyS: return "EmptyS";
        case ErrorKind::EmptyGrid: return "EmptyGrid";
        case ErrorKind::DegenerateMargins: return "DegenerateMargins";
        case ErrorKind::Empty: return "Empty";
        case ErrorKind::EmptyDomain: return "EmptyDomain";
        case ErrorKind::CyclicGraph: return "CyclicGraph";
        case ErrorKind::InvalidGraph: return "InvalidGraph";
        case ErrorKind::NoComparisons: return "NoComparisons";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::laplace(double scale) {
    double u;
    do {
        u = uniform();
    } while (u <= 0.0);
    u -= 0.5;
    return u < 0 ? scale * std::log(1.0 + 2.0 * u) : -scale * std::log(1.0 - 2.0 * u);
}

std::string_view to_string(Direction d) {
    return d == Direction::Forward ? "forward" : "backward";
}

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

Direction parse_direction(std::string_view text) {
    const auto t = lowercase(text);
    if (t == "forward" || t == "f") return Direction::Forward;
    if (t == "backward" || t == "b") return Direction::Backward;
    throw Error(ErrorKind::InvalidConfig, "unknown direction '" + std::string(text) + "'");
}

std::string_view display_name(Domain d) {
    switch (d) {
        case Domain::Biology: return "Biology";
        case Domain::ClimateEnvironment: return "Climate/Environment";
        case Domain::EconomicsFinance: return "Economics/Finance";
        case Domain::Medicine: return "Medicine";
        case Domain::Physics: return "Physics";
    }
    return "?";
}

char initial(Domain d) { return display_name(d).front(); }

Domain parse_domain(std::string_view text) {
    const auto t = lowercase(text);
    for (auto d : kAllDomains) {
        const auto name = lowercase(display_name(d));
        std::string compact = name;
        std::erase(compact, '/');
        if (t == name || t == compact || (t.size() == 1 && t[0] == name[0])) return d;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown domain '" + std::string(text) + "'");
}

}  // namespace l2dcd
