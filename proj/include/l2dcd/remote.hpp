#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace l2dcd::remote {

/// Environment variable holding the bearer token for remote experts and embeddings.
inline constexpr const char* kApiKeyEnv = "L2DCD_EXPERT_API_KEY";

std::optional<std::string> api_key();

std::string sha256_hex(std::string_view bytes);

struct HttpResult {
    int status = 0;      // 0 when the request never completed
    std::string body;
    std::string error;   // transport-level description, empty on success

    bool ok() const noexcept { return error.empty() && status >= 200 && status < 300; }
};

/// POST a JSON body to an absolute http(s) URL with an optional bearer token.
HttpResult post_json(const std::string& url, const nlohmann::json& body, const std::string& bearer,
                     double timeout_s);

/// GET an absolute http(s) URL.
HttpResult get(const std::string& url, double timeout_s);

/// Content-addressed JSON store: one immutable `<key>.json` file per entry.
/// Writes go to a temporary file in the same directory and are renamed into place.
class ContentCache {
public:
    explicit ContentCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<nlohmann::json> get(const std::string& key) const;
    void put(const std::string& key, const nlohmann::json& value) const;
    std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

}  // namespace l2dcd::remote
