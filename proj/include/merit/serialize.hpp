#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "merit/bins.hpp"
#include "merit/dml.hpp"
#include "merit/local_dml.hpp"
#include "merit/local_poly.hpp"
#include "merit/table.hpp"

namespace merit {

// Result writers. Numbers use the shortest round-trip representation and
// nulls become empty CSV cells or JSON null, so equal results give equal bytes.

void write_bins_csv(const std::vector<BinStat>& bins, const std::filesystem::path& path);

/// Columns: center, raw, smoothed, ci_low, ci_high, n_window, then the
/// smoothed bounds, the optional observational slope and the failure reason.
void write_cate_csv(const CateCurve& curve, const std::filesystem::path& path,
                    const std::vector<double>& observational = {});
nlohmann::json cate_to_json(const CateCurve& curve, bool include_bootstrap);

/// One row per (temporal window, CATE window), labelled by the temporal
/// window's last timestamp.
void write_rolling_csv(const std::vector<TemporalCurve>& curves,
                       const std::filesystem::path& path);
nlohmann::json rolling_to_json(const std::vector<TemporalCurve>& curves, bool include_bootstrap);

/// One row per grid point, in raw (denormalized) level and hour units.
void write_grid_csv(const std::vector<LocalFitGrid>& grids, const std::filesystem::path& path);

nlohmann::json ate_to_json(const AteEstimate& ate);
nlohmann::json provenance_to_json(const Provenance& provenance);

/// JSON number, or null for NaN.
nlohmann::json number_or_null(double v);

/// Writes `j` indented with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace merit
