#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "merit/learners.hpp"
#include "merit/table.hpp"

namespace testing {

// Fresh directory under the system temp dir, unique per call.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("merit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline merit::MarketTable make_table(std::vector<std::pair<std::string, merit::Column>> cols) {
    return merit::MarketTable::from_columns({}, std::move(cols));
}

inline merit::FeatureMatrix features(std::vector<std::string> names,
                                     std::vector<std::vector<double>> cols) {
    merit::FeatureMatrix x;
    x.names = std::move(names);
    x.columns = std::move(cols);
    return x;
}

}  // namespace testing
