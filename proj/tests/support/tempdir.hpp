#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "tmeval/random.hpp"

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::uint64_t counter = 0;
        const auto salt = tmeval::derive_seed(static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)),
                                              ++counter);
        path = std::filesystem::temp_directory_path() / ("tmeval-test-" + std::to_string(salt));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
