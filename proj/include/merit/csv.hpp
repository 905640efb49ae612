#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "merit/table.hpp"

namespace merit {

/// Maps canonical column names onto the headers found in a source file.
/// Canonical names that are not remapped are looked up verbatim.
struct CsvSchema {
    std::map<std::string, std::string> rename;  // canonical -> source header
    std::vector<std::string> required;
    std::vector<std::string> optional;

    /// Timestamp, APX price, load, fuel prices, wind and solar capacity and
    /// forecast are required; NordPool, intraday price and actual load are
    /// read when present.
    static CsvSchema market_default();

    std::string source_name(const std::string& canonical) const;
};

/// Reads a comma-separated file with a header row. Rows whose cells fail to
/// parse are excluded and tallied by reason in the provenance. Columns not
/// named by the schema are carried along as extra numeric columns.
MarketTable ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes timestamps as ISO-8601 UTC and numbers in shortest round-trip form;
/// nulls become empty cells.
void write_csv(const MarketTable& table, const std::filesystem::path& path);

std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace merit
