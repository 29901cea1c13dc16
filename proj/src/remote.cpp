#include "l2dcd/remote.hpp"

#include "l2dcd/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/sha.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace l2dcd::remote {

namespace fs = std::filesystem;

std::optional<std::string> api_key() {
    const char* v = std::getenv(kApiKeyEnv);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char c : digest) {
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 0xf]);
    }
    return out;
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::InvalidConfig, "endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResult post_json(const std::string& url, const nlohmann::json& body, const std::string& bearer,
                     double timeout_s) {
    const auto parts = split_url(url);
    HttpResult result;
    try {
        httplib::Client client(parts.origin);
        const auto secs = static_cast<time_t>(timeout_s);
        const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
        auto res = client.Post(parts.path, headers, body.dump(), "application/json");
        if (!res) {
            result.error = httplib::to_string(res.error());
            return result;
        }
        result.status = res->status;
        result.body = res->body;
        if (!result.ok() && result.error.empty()) result.error = "HTTP status " + std::to_string(res->status);
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

HttpResult get(const std::string& url, double timeout_s) {
    const auto parts = split_url(url);
    HttpResult result;
    try {
        httplib::Client client(parts.origin);
        const auto secs = static_cast<time_t>(timeout_s);
        const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_follow_location(true);
        auto res = client.Get(parts.path);
        if (!res) {
            result.error = httplib::to_string(res.error());
            return result;
        }
        result.status = res->status;
        result.body = res->body;
        if (!result.ok()) result.error = "HTTP status " + std::to_string(res->status);
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

std::optional<nlohmann::json> ContentCache::get(const std::string& key) const {
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

void ContentCache::put(const std::string& key, const nlohmann::json& value) const {
    static std::atomic<unsigned long> counter{0};
    fs::create_directories(dir_);
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    const fs::path tmp = dir_ / (key + ".tmp." + std::to_string(tid) + "." + std::to_string(counter++));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::MissingFile, "cannot write cache file " + tmp.string());
        out << value.dump(2) << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, path_for(key), ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::MissingFile, "cannot publish cache file " + path_for(key).string());
    }
}

}  // namespace l2dcd::remote
