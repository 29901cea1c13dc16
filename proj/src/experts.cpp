#include "l2dcd/experts.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/remote.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace l2dcd::experts {

bool SyntheticExpertSpec::deterministic() const {
    return std::all_of(p_by_domain.begin(), p_by_domain.end(), [](double p) { return p == 0.0 || p == 1.0; });
}

SyntheticExpertSpec make_epsilon_expert(double epsilon, std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw Error(ErrorKind::OutOfRange, "epsilon must lie in (0, 0.5), got " + std::to_string(epsilon));
    SyntheticExpertSpec spec;
    std::ostringstream name;
    name << "eps=" << epsilon;
    spec.name = name.str();
    spec.seed = seed;
    for (Domain d : kAllDomains) {
        const bool good = d == Domain::Biology || d == Domain::EconomicsFinance || d == Domain::Physics;
        spec.p_by_domain[index_of(d)] = good ? 1.0 - epsilon : epsilon;
    }
    return spec;
}

SyntheticExpertSpec make_p_expert(const std::set<Domain>& good_domains) {
    if (good_domains.size() != 3)
        throw Error(ErrorKind::WrongCardinality,
                    "p-experts need exactly 3 good domains, got " + std::to_string(good_domains.size()));
    SyntheticExpertSpec spec;
    for (Domain d : good_domains) {  // std::set iterates in enum order, i.e. alphabetical initials
        spec.name.push_back(initial(d));
        spec.p_by_domain[index_of(d)] = 1.0;
    }
    return spec;
}

SyntheticExpertSpec make_p_expert(std::string_view initials) {
    std::set<Domain> good;
    for (char c : initials) good.insert(parse_domain(std::string(1, c)));
    if (good.size() != initials.size())
        throw Error(ErrorKind::WrongCardinality, "repeated domain in '" + std::string(initials) + "'");
    return make_p_expert(good);
}

std::vector<SyntheticExpertSpec> all_p_experts() {
    std::vector<SyntheticExpertSpec> out;
    for (std::size_t a = 0; a < kNumDomains; ++a)
        for (std::size_t b = a + 1; b < kNumDomains; ++b)
            for (std::size_t c = b + 1; c < kNumDomains; ++c)
                out.push_back(make_p_expert(std::set<Domain>{kAllDomains[a], kAllDomains[b], kAllDomains[c]}));
    return out;
}

ExpertPrediction synthetic_predict(const SyntheticExpertSpec& spec, const data::CausalPair& pair) {
    Rng rng = Rng::keyed({spec.seed, static_cast<std::uint64_t>(pair.id), 0xe4e47ULL});
    const bool correct = rng.bernoulli(spec.p(pair.domain));
    return {pair.id, correct ? pair.truth : opposite(pair.truth), std::nullopt};
}

// ---------------------------------------------------------------------------

Prompt build_prompt(std::string_view description) {
    if (description.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw Error(ErrorKind::EmptyDescription, "cannot prompt with an empty description");
    return {std::string(kSystemPrompt), "```  " + std::string(description) + "  ```"};
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Occurrences of `needle` in `hay` not preceded by an alphanumeric character
// (and, when `word_end` is set, not followed by one either).
bool contains_standalone(const std::string& hay, std::string_view needle, bool word_end) {
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
        const auto end = pos + needle.size();
        const bool right_ok = !word_end || end >= hay.size() || !is_word_char(hay[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

std::optional<Direction> resolve(bool option1, bool option2, std::string_view raw) {
    if (option1 && option2)
        throw Error(ErrorKind::Ambiguous, "answer names both options: " + std::string(raw.substr(0, 200)));
    if (option1) return Direction::Forward;
    if (option2) return Direction::Backward;
    return std::nullopt;
}

}  // namespace

Direction parse_answer(std::string_view raw) {
    std::string text(raw);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    if (auto d = resolve(contains_standalone(text, "1)", false), contains_standalone(text, "2)", false), raw)) return *d;
    if (auto d = resolve(contains_standalone(text, "x causes y", true), contains_standalone(text, "y causes x", true), raw))
        return *d;
    throw Error(ErrorKind::Unparseable, "no option marker in answer: " + std::string(raw.substr(0, 200)));
}

// ---------------------------------------------------------------------------

std::string remote_cache_key(const RemoteExpertConfig& cfg, std::string_view description) {
    std::string material = "chat\n" + cfg.model_name + '\n' + std::to_string(cfg.seed) + '\n';
    material.append(description);
    return remote::sha256_hex(material);
}

nlohmann::json chat_request(const RemoteExpertConfig& cfg, std::string_view description) {
    const Prompt prompt = build_prompt(description);
    return {{"model", cfg.model_name},
            {"seed", cfg.seed},
            {"messages",
             {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}}};
}

ExpertPrediction remote_predict(const RemoteExpertConfig& cfg, const data::CausalPair& pair) {
    if (cfg.endpoint_url.empty()) throw Error(ErrorKind::InvalidConfig, "remote expert endpoint_url is empty");
    const auto request = chat_request(cfg, pair.description);
    const std::string key = remote_cache_key(cfg, pair.description);
    const remote::ContentCache cache(cfg.cache_dir);

    if (auto hit = cache.get(key); hit && hit->contains("direction")) {
        ExpertPrediction out{pair.id, parse_direction(hit->at("direction").get<std::string>()), std::nullopt};
        if (hit->contains("raw_answer")) out.raw_answer = hit->at("raw_answer").get<std::string>();
        return out;
    }

    const auto token = remote::api_key();
    if (!token) throw Error(ErrorKind::AuthMissing, std::string(remote::kApiKeyEnv) + " is not set and the query is not cached");

    std::optional<Error> last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto res = remote::post_json(cfg.endpoint_url, request, *token, cfg.timeout_s);
        if (!res.ok()) {
            last_error = Error(ErrorKind::Transport, cfg.endpoint_url + ": " + res.error);
            continue;
        }
        std::string content;
        try {
            const auto body = nlohmann::json::parse(res.body);
            content = body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = Error(ErrorKind::Transport, std::string("malformed chat response: ") + e.what());
            continue;
        }
        try {
            const Direction direction = parse_answer(content);
            cache.put(key, {{"request_hash", key},
                            {"model", cfg.model_name},
                            {"seed", cfg.seed},
                            {"raw_response", res.body},
                            {"raw_answer", content},
                            {"direction", std::string(to_string(direction))}});
            return {pair.id, direction, content};
        } catch (const Error& e) {
            last_error = e;
        }
    }
    throw *last_error;
}

}  // namespace l2dcd::experts
