#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace merit {

using Column = std::vector<double>;

/// Null cells are stored as quiet NaN.
inline constexpr double kNull = std::numeric_limits<double>::quiet_NaN();
inline bool is_null(double v) { return std::isnan(v); }

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Where a table came from and what was dropped or flagged on the way in.
struct Provenance {
    std::string source;
    std::size_t rows_read = 0;
    std::size_t rows_parsed = 0;
    std::map<std::string, std::size_t> excluded;    // reason -> rows
    std::map<std::string, std::size_t> null_cells;  // column -> null count
    std::map<std::string, std::size_t> violations;  // invariant -> rows (reported, not dropped)

    std::size_t excluded_total() const;
};

/// Immutable column-oriented table. Columns are shared between copies, so
/// deriving a table with one more column does not copy the others.
class MarketTable {
public:
    MarketTable() = default;

    /// Builds a table; all columns (and timestamps, when non-empty) must have
    /// equal length.
    static MarketTable from_columns(std::vector<Timestamp> timestamps,
                                    std::vector<std::pair<std::string, Column>> columns,
                                    Provenance provenance = {});

    std::size_t n_rows() const { return n_rows_; }
    bool empty() const { return n_rows_ == 0; }

    bool has_column(std::string_view name) const;
    std::span<const double> column(std::string_view name) const;
    const std::vector<std::string>& column_names() const { return names_; }

    bool has_timestamps() const { return static_cast<bool>(timestamps_); }
    std::span<const Timestamp> timestamps() const;

    const Provenance& provenance() const { return provenance_; }

    /// Returns a copy with `name` appended (or replaced when present).
    MarketTable with_column(std::string name, Column values) const;
    MarketTable with_provenance(Provenance provenance) const;

    /// Gathers rows in the given order.
    MarketTable select_rows(std::span<const std::size_t> rows) const;

    /// Indices of rows with no null among `columns`.
    std::vector<std::size_t> complete_rows(std::span<const std::string> columns) const;

private:
    std::size_t index_of(std::string_view name) const;

    std::size_t n_rows_ = 0;
    std::shared_ptr<const std::vector<Timestamp>> timestamps_;
    std::vector<std::string> names_;
    std::vector<std::shared_ptr<const Column>> columns_;
    Provenance provenance_;
};

}  // namespace merit
