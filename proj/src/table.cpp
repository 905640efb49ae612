#include "merit/table.hpp"

#include <algorithm>
#include <numeric>

#include "merit/error.hpp"

namespace merit {

std::size_t Provenance::excluded_total() const {
    return std::accumulate(excluded.begin(), excluded.end(), std::size_t{0},
                           [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

MarketTable MarketTable::from_columns(std::vector<Timestamp> timestamps,
                                      std::vector<std::pair<std::string, Column>> columns,
                                      Provenance provenance) {
    MarketTable t;
    std::optional<std::size_t> n;
    if (!timestamps.empty()) n = timestamps.size();
    for (const auto& [name, values] : columns) {
        if (!n) n = values.size();
        if (values.size() != *n)
            throw SchemaError("column '" + name + "' has " + std::to_string(values.size()) +
                              " rows, expected " + std::to_string(*n));
    }
    t.n_rows_ = n.value_or(0);
    if (!timestamps.empty())
        t.timestamps_ = std::make_shared<const std::vector<Timestamp>>(std::move(timestamps));
    for (auto& [name, values] : columns) {
        if (t.has_column(name)) throw SchemaError("duplicate column '" + name + "'");
        t.names_.push_back(name);
        t.columns_.push_back(std::make_shared<const Column>(std::move(values)));
    }
    t.provenance_ = std::move(provenance);
    return t;
}

std::size_t MarketTable::index_of(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? names_.size() : static_cast<std::size_t>(it - names_.begin());
}

bool MarketTable::has_column(std::string_view name) const {
    return index_of(name) < names_.size();
}

std::span<const double> MarketTable::column(std::string_view name) const {
    const auto i = index_of(name);
    if (i == names_.size()) throw SchemaError("no column named '" + std::string(name) + "'");
    return *columns_[i];
}

std::span<const Timestamp> MarketTable::timestamps() const {
    if (!timestamps_) throw SchemaError("table has no timestamp column");
    return *timestamps_;
}

MarketTable MarketTable::with_column(std::string name, Column values) const {
    if (values.size() != n_rows_ && !(names_.empty() && !timestamps_))
        throw SchemaError("column '" + name + "' has " + std::to_string(values.size()) +
                          " rows, expected " + std::to_string(n_rows_));
    MarketTable t = *this;
    if (names_.empty() && !timestamps_) t.n_rows_ = values.size();
    auto col = std::make_shared<const Column>(std::move(values));
    const auto i = index_of(name);
    if (i < names_.size()) {
        t.columns_[i] = std::move(col);
    } else {
        t.names_.push_back(std::move(name));
        t.columns_.push_back(std::move(col));
    }
    return t;
}

MarketTable MarketTable::with_provenance(Provenance provenance) const {
    MarketTable t = *this;
    t.provenance_ = std::move(provenance);
    return t;
}

MarketTable MarketTable::select_rows(std::span<const std::size_t> rows) const {
    MarketTable t;
    t.n_rows_ = rows.size();
    t.names_ = names_;
    t.provenance_ = provenance_;
    if (timestamps_) {
        std::vector<Timestamp> ts(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) ts[i] = (*timestamps_).at(rows[i]);
        t.timestamps_ = std::make_shared<const std::vector<Timestamp>>(std::move(ts));
    }
    t.columns_.reserve(columns_.size());
    for (const auto& src : columns_) {
        Column c(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) c[i] = src->at(rows[i]);
        t.columns_.push_back(std::make_shared<const Column>(std::move(c)));
    }
    return t;
}

std::vector<std::size_t> MarketTable::complete_rows(std::span<const std::string> columns) const {
    std::vector<std::span<const double>> cols;
    cols.reserve(columns.size());
    for (const auto& c : columns) cols.push_back(column(c));
    std::vector<std::size_t> rows;
    rows.reserve(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) {
        bool ok = true;
        for (const auto& c : cols) {
            if (is_null(c[i])) {
                ok = false;
                break;
            }
        }
        if (ok) rows.push_back(i);
    }
    return rows;
}

}  // namespace merit
