#include "l2dcd/data.hpp"

#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace l2dcd::data {

namespace fs = std::filesystem;

void validate(const CausalPair& pair) {
    if (pair.x_u.size() != pair.x_v.size())
        throw Error(ErrorKind::MalformedNumeric, "pair " + std::to_string(pair.id) + ": column lengths differ");
    if (pair.x_u.size() < 2)
        throw Error(ErrorKind::MalformedNumeric, "pair " + std::to_string(pair.id) + ": fewer than 2 samples");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(pair.x_u.begin(), pair.x_u.end(), finite) ||
        !std::all_of(pair.x_v.begin(), pair.x_v.end(), finite))
        throw Error(ErrorKind::MalformedNumeric, "pair " + std::to_string(pair.id) + ": non-finite value");
    if (pair.description.find_first_not_of(" \t\r\n") == std::string::npos)
        throw Error(ErrorKind::EmptyDescription, "pair " + std::to_string(pair.id));
    if (!(pair.weight > 0.0))
        throw Error(ErrorKind::MalformedNumeric, "pair " + std::to_string(pair.id) + ": weight must be positive");
}

// ---------------------------------------------------------------------------
// Split table

const SplitEntry& SplitTable::lookup(int id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorKind::UnknownId, "pair id " + std::to_string(id));
    return it->second;
}

std::vector<int> SplitTable::ids(Split split) const {
    std::vector<int> out;
    for (const auto& [id, e] : entries_)
        if (e.split == split) out.push_back(id);
    return out;
}

std::vector<int> SplitTable::ids(Split split, Domain domain) const {
    std::vector<int> out;
    for (const auto& [id, e] : entries_)
        if (e.split == split && e.domain == domain) out.push_back(id);
    return out;
}

const SplitTable& split_table() {
    static const SplitTable table = [] {
        struct Row {
            Domain domain;
            std::vector<int> train;
            std::vector<int> test;
        };
        const std::vector<Row> rows = {
            {Domain::Biology, {7, 9, 70, 78, 79, 90, 92}, {5, 6, 8, 10, 11, 80, 89, 91}},
            {Domain::ClimateEnvironment,
             {1, 3, 4, 13, 15, 19, 21, 42, 48, 50, 72, 77, 82, 83, 94, 95},
             {2, 14, 16, 20, 43, 44, 45, 46, 49, 51, 69, 73, 81, 87, 93, 96}},
            {Domain::EconomicsFinance,
             {12, 47, 57, 58, 60, 61, 62, 63, 67, 68, 86},
             {17, 56, 59, 64, 65, 66, 74, 75, 76, 84, 99}},
            {Domain::Medicine, {18, 22, 34, 36, 39, 40, 88, 107}, {23, 24, 33, 35, 37, 38, 41, 85}},
            {Domain::Physics, {26, 28, 30, 31, 32, 97, 103, 104},
             {25, 27, 29, 98, 100, 101, 102, 106, 108}},
        };
        std::map<int, SplitEntry> entries;
        for (const auto& row : rows) {
            for (int id : row.train) entries.emplace(id, SplitEntry{row.domain, Split::Train});
            for (int id : row.test) entries.emplace(id, SplitEntry{row.domain, Split::Test});
        }
        return SplitTable(std::move(entries));
    }();
    return table;
}

// ---------------------------------------------------------------------------
// Tuebingen loader

namespace {

std::string pair_file_name(int id, const char* suffix) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair%04d%s", id, suffix);
    return buf;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool parse_double(const std::string& token, double& out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

std::vector<std::vector<double>> read_numeric_rows(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string token;
        while (ls >> token) {
            double v;
            if (!parse_double(token, v) || !std::isfinite(v))
                throw Error(ErrorKind::MalformedNumeric,
                            path.string() + ":" + std::to_string(line_no) + ": '" + token + "'");
            row.push_back(v);
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorKind::MalformedNumeric,
                        path.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::map<int, PairMeta> read_pair_meta(const fs::path& meta_file) {
    std::ifstream in(meta_file);
    if (!in) throw Error(ErrorKind::MissingFile, meta_file.string());
    std::map<int, PairMeta> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        PairMeta m;
        if (!(ls >> m.id)) continue;
        if (!(ls >> m.cause_first >> m.cause_last >> m.effect_first >> m.effect_last))
            throw Error(ErrorKind::MalformedNumeric, meta_file.string() + ": bad row for id " + std::to_string(m.id));
        if (!(ls >> m.weight)) m.weight = 1.0;
        out[m.id] = m;
    }
    return out;
}

CausalPair load_pair(const fs::path& root_dir, int id, const LoadOptions& options) {
    const fs::path meta_path = options.meta_file.value_or(root_dir / "pairmeta.txt");
    const auto meta = read_pair_meta(meta_path);
    auto mit = meta.find(id);
    if (mit == meta.end()) throw Error(ErrorKind::UnknownId, "pair id " + std::to_string(id) + " not in " + meta_path.string());
    const PairMeta& m = mit->second;
    if (m.cause_last != m.cause_first || m.effect_last != m.effect_first)
        throw Error(ErrorKind::MultivariatePair, "pair id " + std::to_string(id));

    const SplitEntry& entry = split_table().lookup(id);

    const auto rows = read_numeric_rows(root_dir / pair_file_name(id, ".txt"));
    if (!rows.empty() && rows.front().size() != 2)
        throw Error(ErrorKind::MultivariatePair,
                    "pair id " + std::to_string(id) + " has " + std::to_string(rows.front().size()) + " columns");
    if (rows.size() < 2)
        throw Error(ErrorKind::MalformedNumeric, "pair id " + std::to_string(id) + ": fewer than 2 rows");

    CausalPair pair;
    pair.id = id;
    pair.domain = entry.domain;
    pair.weight = m.weight;
    pair.truth = m.cause_first == 1 ? Direction::Forward : Direction::Backward;

    const std::size_t n = rows.size();
    const std::size_t keep = std::min(n, kMaxRows);
    pair.x_u.reserve(keep);
    pair.x_v.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& row = rows[n == keep ? i : i * n / keep];
        pair.x_u.push_back(row[0]);
        pair.x_v.push_back(row[1]);
    }

    const std::string des_name = pair_file_name(id, "_des.txt");
    fs::path des_path = root_dir / des_name;
    if (options.description_overlay && fs::exists(*options.description_overlay / des_name))
        des_path = *options.description_overlay / des_name;
    pair.description = read_text(des_path);

    validate(pair);
    return pair;
}

std::pair<std::vector<double>, std::vector<double>> read_two_columns(const fs::path& path) {
    const auto rows = read_numeric_rows(path);
    if (!rows.empty() && rows.front().size() != 2)
        throw Error(ErrorKind::MultivariatePair, path.string() + " has " + std::to_string(rows.front().size()) + " columns");
    if (rows.size() < 2) throw Error(ErrorKind::MalformedNumeric, path.string() + ": fewer than 2 rows");
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& r : rows) {
        out.first.push_back(r[0]);
        out.second.push_back(r[1]);
    }
    return out;
}

std::vector<CausalPair> load_all(const fs::path& root_dir, const LoadOptions& options) {
    std::vector<CausalPair> out;
    for (const auto& [id, entry] : split_table().entries()) out.push_back(load_pair(root_dir, id, options));
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

namespace {

struct DomainVocabulary {
    std::vector<const char*> variables;
    const char* setting;
};

const DomainVocabulary& vocabulary(Domain d) {
    static const DomainMap<DomainVocabulary> vocab = {{
        {{"gene expression level", "protein abundance", "cell count", "shell height", "leaf area",
          "body mass", "enzyme activity", "growth rate"},
         "organisms, cells and their growth"},
        {{"rainfall", "air temperature", "ozone concentration", "river discharge", "snow depth",
          "wind speed", "solar radiation", "soil moisture"},
         "weather stations, the atmosphere and ecosystems"},
        {{"household income", "stock return", "interest rate", "unemployment rate", "consumer spending",
          "exchange rate", "gross domestic product", "inflation"},
         "markets, prices and national accounts"},
        {{"blood pressure", "heart rate", "cholesterol level", "patient age", "drug dosage",
          "tumor size", "insulin level", "body temperature"},
         "patients, clinical trials and hospital records"},
        {{"voltage", "current", "pressure", "displacement", "frequency", "magnetic field",
          "kinetic energy", "wavelength"},
         "laboratory instruments and physical measurements"},
    }};
    return vocab[index_of(d)];
}

std::string describe(Domain domain, const std::string& name_u, const std::string& name_v) {
    const auto& vocab = vocabulary(domain);
    std::string d(display_name(domain));
    std::replace(d.begin(), d.end(), '/', ' ');
    return "Dataset from the " + d + " domain, collected from " + vocab.setting +
           ".\nThe first column (x) contains " + name_u + ".\nThe second column (y) contains " +
           name_v + ".\nBoth columns were recorded jointly for every unit in a " + d + " study.";
}

}  // namespace

std::vector<CausalPair> generate_synthetic(const SyntheticBenchSpec& spec) {
    if (spec.n_pairs_per_domain <= 0) throw Error(ErrorKind::InvalidSpec, "n_pairs_per_domain must be positive");
    if (spec.n_samples < 10) throw Error(ErrorKind::InvalidSpec, "n_samples must be at least 10");
    if (!(spec.noise_scale > 0.0) || !std::isfinite(spec.noise_scale))
        throw Error(ErrorKind::InvalidSpec, "noise_scale must be positive");

    std::vector<CausalPair> out;
    out.reserve(kNumDomains * static_cast<std::size_t>(spec.n_pairs_per_domain));
    int id = 0;
    for (Domain domain : kAllDomains) {
        for (int j = 0; j < spec.n_pairs_per_domain; ++j) {
            ++id;
            Rng rng = Rng::keyed({spec.seed, static_cast<std::uint64_t>(id), 0x5157ULL});
            CausalPair pair;
            pair.id = id;
            pair.domain = domain;
            pair.truth = rng.bernoulli(0.5) ? Direction::Forward : Direction::Backward;

            const auto& names = vocabulary(domain).variables;
            const auto a = rng.below(names.size());
            auto b = rng.below(names.size() - 1);
            if (b >= a) ++b;
            pair.name_u = names[a];
            pair.name_v = names[b];

            const auto n = static_cast<std::size_t>(spec.n_samples);
            std::vector<double> cause(n), effect(n);
            if (spec.mechanism == Mechanism::LinearNonGaussian) {
                const double slope = rng.uniform(0.5, 2.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
                const double half_width = spec.noise_scale * std::sqrt(3.0);
                for (std::size_t i = 0; i < n; ++i) {
                    cause[i] = rng.uniform(-1.0, 1.0);
                    effect[i] = slope * cause[i] + rng.uniform(-half_width, half_width);
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    cause[i] = rng.uniform();
                    effect[i] = cause[i] + cause[i] * cause[i] * cause[i] + spec.noise_scale * rng.normal();
                }
            }
            if (pair.truth == Direction::Forward) {
                pair.x_u = std::move(cause);
                pair.x_v = std::move(effect);
            } else {
                pair.x_u = std::move(effect);
                pair.x_v = std::move(cause);
            }
            pair.description = describe(domain, pair.name_u, pair.name_v);
            out.push_back(std::move(pair));
        }
    }
    return out;
}

std::pair<std::vector<CausalPair>, std::vector<CausalPair>> stratified_split(const std::vector<CausalPair>& pairs) {
    std::vector<CausalPair> train, test;
    DomainMap<int> seen{};
    for (const auto& p : pairs) {
        auto& k = seen[index_of(p.domain)];
        (k % 2 == 0 ? train : test).push_back(p);
        ++k;
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const CausalPair& pair) {
    return {{"id", pair.id},
            {"name_u", pair.name_u},
            {"name_v", pair.name_v},
            {"domain", std::string(display_name(pair.domain))},
            {"truth", std::string(to_string(pair.truth))},
            {"weight", pair.weight},
            {"description", pair.description},
            {"x_u", pair.x_u},
            {"x_v", pair.x_v}};
}

CausalPair pair_from_json(const nlohmann::json& j) {
    try {
        CausalPair p;
        p.id = j.at("id").get<int>();
        p.name_u = j.value("name_u", std::string("x"));
        p.name_v = j.value("name_v", std::string("y"));
        p.domain = parse_domain(j.at("domain").get<std::string>());
        p.truth = parse_direction(j.at("truth").get<std::string>());
        p.weight = j.value("weight", 1.0);
        p.description = j.at("description").get<std::string>();
        p.x_u = j.at("x_u").get<std::vector<double>>();
        p.x_v = j.at("x_v").get<std::vector<double>>();
        validate(p);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedNumeric, std::string("pair JSON: ") + e.what());
    }
}

nlohmann::json to_json(const std::vector<CausalPair>& pairs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pairs) arr.push_back(to_json(p));
    return arr;
}

std::vector<CausalPair> pairs_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(ErrorKind::MalformedNumeric, "pair list JSON must be an array");
    std::vector<CausalPair> out;
    for (const auto& item : j) out.push_back(pair_from_json(item));
    return out;
}

std::string_view to_string(Mechanism m) {
    return m == Mechanism::LinearNonGaussian ? "linear_non_gaussian" : "nonlinear_anm";
}

Mechanism parse_mechanism(std::string_view text) {
    if (text == "linear_non_gaussian" || text == "LinearNonGaussian") return Mechanism::LinearNonGaussian;
    if (text == "nonlinear_anm" || text == "NonlinearANM") return Mechanism::NonlinearANM;
    throw Error(ErrorKind::InvalidSpec, "unknown mechanism '" + std::string(text) + "'");
}

}  // namespace l2dcd::data
