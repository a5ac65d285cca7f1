#include "bikevol/pipeline/feature_table.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "bikevol/core/csv.hpp"
#include "bikevol/core/errors.hpp"

namespace bikevol::pipeline {

using nlohmann::json;

std::string_view to_string(FeatureGroup group) {
    switch (group) {
        case FeatureGroup::Crowdsourced: return "crowdsourced";
        case FeatureGroup::Infrastructure: return "infrastructure";
        case FeatureGroup::Weather: return "weather";
        case FeatureGroup::Socioeconomic: return "socioeconomic";
        case FeatureGroup::BikeSharing: return "bike_sharing";
        case FeatureGroup::Holiday: return "holiday";
        case FeatureGroup::Motorized: return "motorized";
        case FeatureGroup::Time: return "time";
    }
    return "unknown";
}

FeatureGroup parse_feature_group(std::string_view text) {
    for (auto g : kAllGroups) {
        if (to_string(g) == text) return g;
    }
    throw ConfigError("unknown feature group '" + std::string(text) + "'");
}

std::optional<size_t> FeatureTable::find_column(std::string_view name) const {
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].name == name) return c;
    }
    return std::nullopt;
}

std::vector<std::string> FeatureTable::column_names() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.name);
    return out;
}

std::vector<size_t> FeatureTable::columns_in_group(FeatureGroup group) const {
    std::vector<size_t> out;
    for (size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].group == group) out.push_back(c);
    }
    return out;
}

std::set<FeatureGroup> FeatureTable::groups() const {
    std::set<FeatureGroup> out;
    for (const auto& c : columns) out.insert(c.group);
    return out;
}

std::vector<std::string> FeatureTable::stations() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& s : station_ids) {
        if (seen.insert(s).second) out.push_back(s);
    }
    return out;
}

std::vector<size_t> FeatureTable::rows_of_station(std::string_view station_id) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < station_ids.size(); ++i) {
        if (station_ids[i] == station_id) out.push_back(i);
    }
    return out;
}

size_t FeatureTable::missing_cells() const {
    size_t n = 0;
    for (const auto& c : columns) {
        for (double v : c.values) n += std::isnan(v) ? 1 : 0;
    }
    return n;
}

FeatureTable FeatureTable::select_rows(std::span<const size_t> rows) const {
    FeatureTable out;
    out.window = window;
    out.station_ids.reserve(rows.size());
    for (size_t r : rows) {
        out.station_ids.push_back(station_ids[r]);
        out.station_kinds.push_back(station_kinds[r]);
        out.dates.push_back(dates[r]);
        out.target.push_back(target[r]);
    }
    out.columns.reserve(columns.size());
    for (const auto& c : columns) {
        FeatureColumn col{c.name, c.group, {}};
        col.values.reserve(rows.size());
        for (size_t r : rows) col.values.push_back(c.values[r]);
        out.columns.push_back(std::move(col));
    }
    return out;
}

FeatureTable FeatureTable::select_columns(const std::vector<std::string>& names) const {
    FeatureTable out;
    out.window = window;
    out.station_ids = station_ids;
    out.station_kinds = station_kinds;
    out.dates = dates;
    out.target = target;
    for (const auto& n : names) {
        const auto idx = find_column(n);
        if (!idx) throw ComputeError("feature table has no column '" + n + "'");
        out.columns.push_back(columns[*idx]);
    }
    return out;
}

void FeatureTable::append_rows(const FeatureTable& other) {
    if (other.column_names() != column_names()) {
        throw ComputeError("append_rows: column layouts differ");
    }
    station_ids.insert(station_ids.end(), other.station_ids.begin(), other.station_ids.end());
    station_kinds.insert(station_kinds.end(), other.station_kinds.begin(), other.station_kinds.end());
    dates.insert(dates.end(), other.dates.begin(), other.dates.end());
    target.insert(target.end(), other.target.begin(), other.target.end());
    for (size_t c = 0; c < columns.size(); ++c) {
        columns[c].values.insert(columns[c].values.end(), other.columns[c].values.begin(),
                                 other.columns[c].values.end());
    }
}

void FeatureTable::check_shape() const {
    const size_t n = target.size();
    if (station_ids.size() != n || station_kinds.size() != n || dates.size() != n) {
        throw ComputeError("feature table row metadata is ragged");
    }
    std::unordered_set<std::string> names;
    for (const auto& c : columns) {
        if (c.values.size() != n) throw ComputeError("feature column '" + c.name + "' is ragged");
        if (!names.insert(c.name).second) throw ComputeError("duplicate feature column '" + c.name + "'");
    }
}

std::string manifest_path_for(const std::string& csv_path) {
    const auto dot = csv_path.rfind(".csv");
    return (dot == std::string::npos ? csv_path : csv_path.substr(0, dot)) + ".manifest.json";
}

void write_feature_table(const FeatureTable& table, const std::string& csv_path,
                         const std::string& manifest_path, const json& metadata) {
    table.check_shape();
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + csv_path + "'");
    std::vector<std::string> header{"station_id", "station_kind", "date", "target"};
    for (const auto& c : table.columns) header.push_back(c.name);
    csv::write_row(out, header);
    std::vector<std::string> fields;
    for (size_t i = 0; i < table.rows(); ++i) {
        fields.clear();
        fields.push_back(table.station_ids[i]);
        fields.emplace_back(to_string(table.station_kinds[i]));
        fields.push_back(format_date(table.dates[i]));
        fields.push_back(csv::format_number(table.target[i]));
        for (const auto& c : table.columns) fields.push_back(csv::format_number(c.values[i]));
        csv::write_row(out, fields);
    }

    json cols = json::array();
    for (const auto& c : table.columns) {
        cols.push_back({{"name", c.name}, {"group", std::string(to_string(c.group))}});
    }
    json manifest = {{"format_version", 1},
                     {"window", std::string(to_string(table.window))},
                     {"rows", table.rows()},
                     {"columns", cols},
                     {"metadata", metadata}};
    std::ofstream mout(manifest_path, std::ios::binary);
    if (!mout) throw DataError("cannot write '" + manifest_path + "'");
    mout << manifest.dump(2) << '\n';
}

FeatureTable read_feature_table(const std::string& csv_path, const std::string& manifest_path) {
    std::ifstream min(manifest_path, std::ios::binary);
    if (!min) throw DataError("cannot open '" + manifest_path + "'");
    json manifest;
    try {
        manifest = json::parse(min);
    } catch (const json::exception& e) {
        throw DataError(manifest_path + ": " + e.what());
    }

    FeatureTable table;
    std::vector<std::string> expected{"station_id", "station_kind", "date", "target"};
    try {
        table.window = parse_count_window(manifest.at("window").get<std::string>());
        for (const auto& c : manifest.at("columns")) {
            table.columns.push_back({c.at("name").get<std::string>(),
                                     parse_feature_group(c.at("group").get<std::string>()), {}});
            expected.push_back(table.columns.back().name);
        }
    } catch (const json::exception& e) {
        throw DataError(manifest_path + ": " + e.what());
    }

    const auto t = csv::read_file(csv_path);
    csv::require_header(t, expected);
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        table.station_ids.push_back(r[0]);
        try {
            table.station_kinds.push_back(parse_station_kind(r[1]));
            table.dates.push_back(parse_date(r[2]));
        } catch (const DataError& e) {
            throw DataError(t.where(i) + ": " + e.what());
        }
        table.target.push_back(csv::parse_number(r[3], t, i));
        for (size_t c = 0; c < table.columns.size(); ++c) {
            table.columns[c].values.push_back(csv::parse_number(r[4 + c], t, i));
        }
    }
    table.check_shape();
    return table;
}

}  // namespace bikevol::pipeline
