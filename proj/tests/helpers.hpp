#pragma once

#include "l2dcd/data.hpp"
#include "l2dcd/error.hpp"
#include "l2dcd/rng.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#define EXPECT_ERROR_KIND(stmt, expected_kind)                                  \
    do {                                                                        \
        try {                                                                   \
            stmt;                                                               \
            ADD_FAILURE() << "expected " << ::l2dcd::to_string(expected_kind);  \
        } catch (const ::l2dcd::Error& e_) {                                    \
            EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                   \
        }                                                                       \
    } while (0)

namespace testutil {

inline const std::filesystem::path kFixtures = L2DCD_FIXTURE_DIR;
inline const std::filesystem::path kGolden = L2DCD_GOLDEN_DIR;

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("l2dcd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline l2dcd::data::CausalPair make_pair(int id, l2dcd::Domain domain, l2dcd::Direction truth,
                                         std::string description = "some description") {
    l2dcd::data::CausalPair p;
    p.id = id;
    p.domain = domain;
    p.truth = truth;
    p.description = std::move(description);
    p.x_u = {0.0, 1.0};
    p.x_v = {1.0, 0.0};
    return p;
}

}  // namespace testutil
