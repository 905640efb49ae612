#include "merit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "merit/error.hpp"
#include "merit/schema.hpp"

namespace merit {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

bool is_null_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "NULL" ||
           s == "None";
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool parse_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && ptr == s.data() + pos + len;
}

}  // namespace

CsvSchema CsvSchema::market_default() {
    CsvSchema s;
    s.required = {std::string(col::timestamp),      std::string(col::apx_price),
                  std::string(col::estimated_load), std::string(col::gas_price),
                  std::string(col::carbon_price),   std::string(col::wind_capacity),
                  std::string(col::wind_forecast),  std::string(col::solar_capacity),
                  std::string(col::solar_forecast)};
    s.optional = {std::string(col::nordpool_price), std::string(col::intraday_price),
                  std::string(col::actual_load)};
    return s;
}

std::string CsvSchema::source_name(const std::string& canonical) const {
    auto it = rename.find(canonical);
    return it == rename.end() ? canonical : it->second;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    std::string_view s = trim(text);
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!parse_int(s, 0, 4, y) || !parse_int(s, 5, 2, mo) || !parse_int(s, 8, 2, d))
        return std::nullopt;
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        if (!parse_int(s, pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
            !parse_int(s, pos + 3, 2, mm))
            return std::nullopt;
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            if (!parse_int(s, pos + 1, 2, ss)) return std::nullopt;
            pos += 3;
            if (pos < s.size() && s[pos] == '.') {
                ++pos;
                while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
            }
        }
    }
    long offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos = s.size();
        } else if (s[pos] == '+' || s[pos] == '-') {
            const int sign = s[pos] == '+' ? 1 : -1;
            int oh = 0, om = 0;
            if (!parse_int(s, pos + 1, 2, oh)) return std::nullopt;
            std::size_t p = pos + 3;
            if (p < s.size() && s[p] == ':') ++p;
            if (p < s.size()) {
                if (!parse_int(s, p, 2, om)) return std::nullopt;
                p += 2;
            }
            if (p != s.size()) return std::nullopt;
            offset = sign * (oh * 3600L + om * 60L);
        } else {
            return std::nullopt;
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + hh * 3600L + mm * 60L + ss - offset;
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    const auto days = ts >= 0 ? ts / 86400 : (ts - 86399) / 86400;
    const auto secs = ts - days * 86400;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

std::string format_double(double v) {
    if (is_null(v)) return {};
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

MarketTable ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_record(line);

    auto find_header = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::string> missing;
    std::optional<std::size_t> ts_index;
    std::vector<std::pair<std::string, std::size_t>> numeric;  // canonical -> field
    std::vector<bool> claimed(header.size(), false);

    auto claim = [&](const std::string& canonical, bool required) {
        const auto idx = find_header(schema.source_name(canonical));
        if (!idx) {
            if (required) missing.push_back(canonical + " (header '" +
                                            schema.source_name(canonical) + "')");
            return;
        }
        claimed[*idx] = true;
        if (canonical == col::timestamp)
            ts_index = idx;
        else
            numeric.emplace_back(canonical, *idx);
    };
    for (const auto& c : schema.required) claim(c, true);
    for (const auto& c : schema.optional) claim(c, false);
    if (!missing.empty()) {
        std::string msg = "missing required column(s):";
        for (const auto& m : missing) msg += " " + m;
        throw SchemaError(msg);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!claimed[i] && !header[i].empty() && header[i] != col::timestamp)
            numeric.emplace_back(header[i], i);
    }

    Provenance prov;
    prov.source = path.string();
    std::vector<Timestamp> timestamps;
    std::vector<Column> values(numeric.size());
    std::vector<double> row(numeric.size());

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++prov.rows_read;
        const auto fields = split_record(line);
        if (fields.size() != header.size()) {
            ++prov.excluded["field_count"];
            continue;
        }
        std::optional<Timestamp> ts;
        if (ts_index) {
            ts = parse_timestamp(fields[*ts_index]);
            if (!ts) {
                ++prov.excluded["bad_timestamp"];
                continue;
            }
            if (!timestamps.empty() && *ts <= timestamps.back()) {
                ++prov.excluded["non_increasing_timestamp"];
                continue;
            }
        }
        bool ok = true;
        for (std::size_t j = 0; j < numeric.size(); ++j) {
            const std::string_view f = fields[numeric[j].second];
            if (is_null_token(f)) {
                row[j] = kNull;
                continue;
            }
            const auto v = parse_number(f);
            if (!v) {
                ++prov.excluded["parse_error:" + numeric[j].first];
                ok = false;
                break;
            }
            row[j] = *v;
        }
        if (!ok) continue;
        if (ts) timestamps.push_back(*ts);
        for (std::size_t j = 0; j < numeric.size(); ++j) values[j].push_back(row[j]);
        ++prov.rows_parsed;
    }
    if (in.bad()) throw IoError("read error on '" + path.string() + "'");
    if (prov.rows_parsed == 0)
        throw EmptyDataError("'" + path.string() + "' has no valid rows (" +
                             std::to_string(prov.excluded_total()) + " excluded)");

    std::vector<std::pair<std::string, Column>> cols;
    for (std::size_t j = 0; j < numeric.size(); ++j) {
        const auto nulls = static_cast<std::size_t>(
            std::count_if(values[j].begin(), values[j].end(), is_null));
        if (nulls) prov.null_cells[numeric[j].first] = nulls;
        cols.emplace_back(numeric[j].first, std::move(values[j]));
    }
    // Known record invariants are reported, not enforced.
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] - timestamps[i - 1] != 1800) ++prov.violations["spacing_not_30min"];
    auto find_col = [&](std::string_view name) -> const Column* {
        for (const auto& [n, c] : cols)
            if (n == name) return &c;
        return nullptr;
    };
    for (auto [cap_name, fc_name] : {std::pair{col::wind_capacity, col::wind_forecast},
                                     std::pair{col::solar_capacity, col::solar_forecast}}) {
        const Column* cap = find_col(cap_name);
        const Column* fc = find_col(fc_name);
        if (!cap || !fc) continue;
        for (std::size_t i = 0; i < cap->size(); ++i) {
            if ((*cap)[i] < 0 || (*fc)[i] < 0) ++prov.violations["negative_" + std::string(fc_name)];
            if ((*fc)[i] > (*cap)[i]) ++prov.violations[std::string(fc_name) + "_above_capacity"];
        }
    }
    return MarketTable::from_columns(std::move(timestamps), std::move(cols), std::move(prov));
}

void write_csv(const MarketTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    const auto& names = table.column_names();
    std::vector<std::span<const double>> cols;
    for (const auto& n : names) cols.push_back(table.column(n));
    bool first = true;
    if (table.has_timestamps()) {
        out << col::timestamp;
        first = false;
    }
    for (const auto& n : names) {
        if (!first) out << ',';
        out << n;
        first = false;
    }
    out << '\n';
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        first = true;
        if (table.has_timestamps()) {
            out << format_timestamp(table.timestamps()[i]);
            first = false;
        }
        for (const auto& c : cols) {
            if (!first) out << ',';
            out << format_double(c[i]);
            first = false;
        }
        out << '\n';
    }
    if (!out) throw IoError("write error on '" + path.string() + "'");
}

}  // namespace merit
