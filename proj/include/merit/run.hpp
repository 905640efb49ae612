#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "merit/config.hpp"

namespace merit {

inline constexpr const char* kVersion = MERIT_VERSION;

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 estimation or I/O failure, 2 invalid configuration
    std::vector<std::filesystem::path> artifacts;
    std::string error_kind;
    std::string error_message;
};

/// Runs the configured analysis and writes its result files, `manifest.json`
/// and, on failure, `error.json` into `config.output`.
RunResult run(const RunConfig& config);

/// Ingests and derives features, writing `table.csv` and `provenance.json`.
RunResult run_ingest(const RunConfig& config);

/// Writes the configured synthetic scenario as `synthetic.csv`.
RunResult run_synth_generate(const RunConfig& config);

/// CRC-32 of a file's bytes.
std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace merit
