#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bikevol/core/counts.hpp"
#include "bikevol/core/time.hpp"
#include "json.hpp"

namespace bikevol::pipeline {

enum class FeatureGroup {
    Crowdsourced,
    Infrastructure,
    Weather,
    Socioeconomic,
    BikeSharing,
    Holiday,
    Motorized,
    Time,
};

inline constexpr std::array<FeatureGroup, 8> kAllGroups = {
    FeatureGroup::Crowdsourced, FeatureGroup::Infrastructure, FeatureGroup::Weather,
    FeatureGroup::Socioeconomic, FeatureGroup::BikeSharing,   FeatureGroup::Holiday,
    FeatureGroup::Motorized,     FeatureGroup::Time};

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_feature_group(std::string_view text);

struct FeatureColumn {
    std::string name;
    FeatureGroup group = FeatureGroup::Time;
    std::vector<double> values;  // NaN marks a missing cell
};

/// Station-day design matrix, stored column-major. Row i describes (station_ids[i], dates[i]).
struct FeatureTable {
    CountWindow window = CountWindow::FullDay;
    std::vector<std::string> station_ids;
    std::vector<StationKind> station_kinds;
    std::vector<Date> dates;
    std::vector<double> target;
    std::vector<FeatureColumn> columns;

    size_t rows() const { return target.size(); }
    size_t cols() const { return columns.size(); }

    std::optional<size_t> find_column(std::string_view name) const;
    std::vector<std::string> column_names() const;
    std::vector<size_t> columns_in_group(FeatureGroup group) const;
    std::set<FeatureGroup> groups() const;
    // Station ids in order of first appearance.
    std::vector<std::string> stations() const;
    std::vector<size_t> rows_of_station(std::string_view station_id) const;
    size_t missing_cells() const;

    FeatureTable select_rows(std::span<const size_t> rows) const;
    FeatureTable select_columns(const std::vector<std::string>& names) const;
    void append_rows(const FeatureTable& other);

    // Throws ComputeError on ragged columns or duplicate column names.
    void check_shape() const;
};

/// Writes the table as CSV (station_id, station_kind, date, target, features...) plus a JSON
/// manifest mapping each column to its group. `metadata` lands in the manifest verbatim.
void write_feature_table(const FeatureTable& table, const std::string& csv_path,
                         const std::string& manifest_path, const nlohmann::json& metadata = {});
FeatureTable read_feature_table(const std::string& csv_path, const std::string& manifest_path);

// Conventional manifest path next to a feature CSV.
std::string manifest_path_for(const std::string& csv_path);

}  // namespace bikevol::pipeline
