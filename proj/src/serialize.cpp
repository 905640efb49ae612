#include "merit/serialize.hpp"

#include <fstream>

#include "merit/csv.hpp"
#include "merit/error.hpp"

namespace merit {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

std::string cell(double v) { return is_null(v) ? std::string() : format_double(v); }

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Failure messages may contain commas; quote them.
std::string text_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

double at(const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : kNull; }

void write_cate_rows(std::ostream& out, const CateCurve& c, const std::string& prefix,
                     const std::vector<double>& observational) {
    for (std::size_t w = 0; w < c.size(); ++w) {
        out << prefix << cell(c.centers[w]) << ',' << cell(c.raw[w]) << ',' << cell(c.smoothed[w])
            << ',' << cell(c.ci_low[w]) << ',' << cell(c.ci_high[w]) << ',' << c.window_sizes[w]
            << ',' << cell(c.ci_low_smoothed[w]) << ',' << cell(c.ci_high_smoothed[w]);
        if (!observational.empty()) out << ',' << cell(at(observational, w));
        out << ',' << text_cell(c.failures[w]) << '\n';
    }
}

nlohmann::json numbers(const std::vector<double>& v) {
    auto a = nlohmann::json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
}

}  // namespace

nlohmann::json number_or_null(double v) {
    if (is_null(v)) return nullptr;
    return v;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_bins_csv(const std::vector<BinStat>& bins, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "bin_lower,bin_upper,mean,ci_low,ci_high,count\n";
    for (const auto& b : bins)
        out << format_double(b.lower) << ',' << format_double(b.upper) << ',' << cell(b.mean)
            << ',' << cell(b.ci_low) << ',' << cell(b.ci_high) << ',' << b.count << '\n';
}

void write_cate_csv(const CateCurve& curve, const std::filesystem::path& path,
                    const std::vector<double>& observational) {
    auto out = open_out(path);
    out << "center,raw,smoothed,ci_low,ci_high,n_window,ci_low_smoothed,ci_high_smoothed";
    if (!observational.empty()) out << ",observational";
    out << ",failure\n";
    write_cate_rows(out, curve, "", observational);
}

nlohmann::json cate_to_json(const CateCurve& c, bool include_bootstrap) {
    nlohmann::json j;
    j["conditioning_column"] = c.conditioning_col;
    j["coverage"] = c.coverage;
    j["replicates"] = c.replicates;
    j["sigma_index"] = c.sigma_index;
    j["fast_mode"] = c.fast;
    j["centers"] = numbers(c.centers);
    j["raw"] = numbers(c.raw);
    j["smoothed"] = numbers(c.smoothed);
    j["ci_low"] = numbers(c.ci_low);
    j["ci_high"] = numbers(c.ci_high);
    j["ci_low_smoothed"] = numbers(c.ci_low_smoothed);
    j["ci_high_smoothed"] = numbers(c.ci_high_smoothed);
    j["window_sizes"] = c.window_sizes;
    j["failures"] = c.failures;
    if (include_bootstrap) {
        auto m = nlohmann::json::array();
        for (const auto& row : c.bootstrap) m.push_back(numbers(row));
        j["bootstrap"] = std::move(m);
    }
    return j;
}

void write_rolling_csv(const std::vector<TemporalCurve>& curves,
                       const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "window_end,window_start,rows,center,raw,smoothed,ci_low,ci_high,n_window,"
           "ci_low_smoothed,ci_high_smoothed,failure\n";
    for (const auto& tc : curves) {
        const auto prefix = format_timestamp(tc.end) + ',' + format_timestamp(tc.start) + ',' +
                            std::to_string(tc.rows) + ',';
        write_cate_rows(out, tc.curve, prefix, {});
    }
}

nlohmann::json rolling_to_json(const std::vector<TemporalCurve>& curves, bool include_bootstrap) {
    auto a = nlohmann::json::array();
    for (const auto& tc : curves) {
        nlohmann::json j;
        j["window_start"] = format_timestamp(tc.start);
        j["window_end"] = format_timestamp(tc.end);
        j["rows"] = tc.rows;
        j["curve"] = cate_to_json(tc.curve, include_bootstrap);
        a.push_back(std::move(j));
    }
    return a;
}

void write_grid_csv(const std::vector<LocalFitGrid>& grids, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "kind,quantile,level,hour,level_normalized,hour_normalized,value,bandwidth,density,"
           "effective_n,failure\n";
    for (const auto& g : grids) {
        const std::string kind = g.kind == FitKind::mean ? "mean" : "quantile";
        for (const auto& e : g.entries) {
            const auto raw = g.normalization.invert(e.center);
            out << kind << ',' << cell(g.quantile) << ',' << format_double(raw.level) << ','
                << format_double(raw.hour) << ',' << format_double(e.center.level) << ','
                << format_double(e.center.hour) << ','
                << (e.model ? format_double(e.model->prediction()) : std::string()) << ','
                << format_double(e.bandwidth) << ',' << format_double(e.density) << ','
                << (e.model ? std::to_string(e.model->effective_n) : std::string()) << ','
                << text_cell(e.failure) << '\n';
        }
    }
}

nlohmann::json ate_to_json(const AteEstimate& ate) {
    nlohmann::json j;
    j["beta_hat"] = ate.beta_hat;
    j["n_used"] = ate.n_used;
    j["fold_betas"] = ate.fold_betas;
    auto folds = nlohmann::json::array();
    for (const auto& f : ate.folds)
        folds.push_back({{"n", f.n},
                         {"beta", f.beta},
                         {"outcome_residual_variance", f.outcome_residual_variance},
                         {"treatment_residual_variance", f.treatment_residual_variance}});
    j["folds"] = std::move(folds);
    return j;
}

nlohmann::json provenance_to_json(const Provenance& p) {
    nlohmann::json j;
    j["source"] = p.source;
    j["rows_read"] = p.rows_read;
    j["rows_parsed"] = p.rows_parsed;
    j["rows_excluded"] = p.excluded_total();
    j["excluded"] = p.excluded;
    j["null_cells"] = p.null_cells;
    j["violations"] = p.violations;
    return j;
}

}  // namespace merit
