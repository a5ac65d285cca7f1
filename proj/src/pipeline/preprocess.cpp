#include "bikevol/pipeline/preprocess.hpp"

#include <cmath>

#include "bikevol/core/errors.hpp"

namespace bikevol::pipeline {

using nlohmann::json;

std::string_view to_string(TransformAction::Kind kind) {
    switch (kind) {
        case TransformAction::Kind::DropCorrelated: return "drop_correlated";
        case TransformAction::Kind::DropConstant: return "drop_constant";
        case TransformAction::Kind::Impute: return "impute";
    }
    return "unknown";
}

namespace {

TransformAction::Kind parse_kind(const std::string& s) {
    for (auto k : {TransformAction::Kind::DropCorrelated, TransformAction::Kind::DropConstant,
                   TransformAction::Kind::Impute}) {
        if (to_string(k) == s) return k;
    }
    throw DataError("unknown transform action '" + s + "'");
}

struct ColumnStats {
    bool complete = true;
    double mean = 0.0;
    double ss = 0.0;  // sum of squared deviations over all rows (complete columns only)
};

// Pearson r over rows where both columns are present; NaN when undefined.
double pairwise_r(const std::vector<double>& a, const std::vector<double>& b) {
    double sa = 0, sb = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) continue;
        sa += a[i];
        sb += b[i];
        ++n;
    }
    if (n < 2) return std::nan("");
    const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) continue;
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nan("");
    return sab / std::sqrt(saa * sbb);
}

bool is_constant(const std::vector<double>& v) {
    bool seen = false;
    double first = 0.0;
    for (double x : v) {
        if (std::isnan(x)) continue;
        if (!seen) {
            first = x;
            seen = true;
        } else if (x != first) {
            return false;
        }
    }
    return true;  // all-missing columns count as constant
}

}  // namespace

double PreprocessPlan::fill_value(size_t k, const std::string& station) const {
    const auto [sum, n] = totals.at(k);
    double own_sum = 0.0;
    size_t own_n = 0;
    if (const auto it = per_station.at(k).find(station); it != per_station[k].end()) {
        own_sum = it->second.first;
        own_n = it->second.second;
    }
    if (n > own_n) return (sum - own_sum) / static_cast<double>(n - own_n);
    if (n > 0) return sum / static_cast<double>(n);
    throw ComputeError("no data to impute column '" + kept_columns.at(k) + "'");
}

PreprocessPlan fit_preprocess(const FeatureTable& table) {
    table.check_shape();
    const size_t C = table.cols();
    const size_t N = table.rows();
    PreprocessPlan plan;

    std::vector<ColumnStats> stats(C);
    for (size_t c = 0; c < C; ++c) {
        const auto& v = table.columns[c].values;
        double s = 0;
        for (double x : v) {
            if (std::isnan(x)) {
                stats[c].complete = false;
                break;
            }
            s += x;
        }
        if (!stats[c].complete || N == 0) continue;
        stats[c].mean = s / static_cast<double>(N);
        for (double x : v) stats[c].ss += (x - stats[c].mean) * (x - stats[c].mean);
    }

    const auto correlation = [&](size_t i, size_t j) {
        if (stats[i].complete && stats[j].complete) {
            if (stats[i].ss <= 0.0 || stats[j].ss <= 0.0) return std::nan("");
            const auto& a = table.columns[i].values;
            const auto& b = table.columns[j].values;
            double sab = 0;
            for (size_t r = 0; r < N; ++r) sab += (a[r] - stats[i].mean) * (b[r] - stats[j].mean);
            return sab / std::sqrt(stats[i].ss * stats[j].ss);
        }
        return pairwise_r(table.columns[i].values, table.columns[j].values);
    };

    // A column goes when some earlier surviving column correlates beyond the threshold.
    std::vector<bool> dropped(C, false);
    for (size_t j = 0; j < C; ++j) {
        for (size_t i = 0; i < j; ++i) {
            if (dropped[i]) continue;
            const double r = correlation(i, j);
            if (!std::isnan(r) && std::abs(r) > kCorrelationThreshold) {
                dropped[j] = true;
                plan.drops.push_back({TransformAction::Kind::DropCorrelated, table.columns[j].name,
                                      table.columns[i].name, "", r, 0});
                break;
            }
        }
    }
    for (size_t c = 0; c < C; ++c) {
        if (dropped[c] || !is_constant(table.columns[c].values)) continue;
        dropped[c] = true;
        plan.drops.push_back({TransformAction::Kind::DropConstant, table.columns[c].name, "", "", 0.0, 0});
    }

    for (size_t c = 0; c < C; ++c) {
        if (dropped[c]) continue;
        plan.kept_columns.push_back(table.columns[c].name);
        std::pair<double, size_t> total{0.0, 0};
        std::map<std::string, std::pair<double, size_t>> by_station;
        const auto& v = table.columns[c].values;
        for (size_t r = 0; r < N; ++r) {
            if (std::isnan(v[r])) continue;
            total.first += v[r];
            ++total.second;
            auto& s = by_station[table.station_ids[r]];
            s.first += v[r];
            ++s.second;
        }
        plan.totals.push_back(total);
        plan.per_station.push_back(std::move(by_station));
    }
    return plan;
}

FeatureTable apply_preprocess(const PreprocessPlan& plan, const FeatureTable& table,
                              std::vector<TransformAction>* log) {
    FeatureTable out = table.select_columns(plan.kept_columns);
    for (size_t k = 0; k < out.cols(); ++k) {
        auto& col = out.columns[k];
        std::map<std::string, std::pair<double, size_t>> filled;  // station -> (value, cells)
        for (size_t r = 0; r < out.rows(); ++r) {
            if (!std::isnan(col.values[r])) continue;
            const auto& station = out.station_ids[r];
            auto it = filled.find(station);
            if (it == filled.end()) it = filled.emplace(station, std::pair{plan.fill_value(k, station), size_t{0}}).first;
            col.values[r] = it->second.first;
            ++it->second.second;
        }
        if (log) {
            for (const auto& [station, vc] : filled) {
                log->push_back({TransformAction::Kind::Impute, col.name, "", station, vc.first, vc.second});
            }
        }
    }
    return out;
}

PreprocessResult preprocess(const FeatureTable& table) {
    const auto plan = fit_preprocess(table);
    PreprocessResult result;
    result.log = plan.drops;
    result.table = apply_preprocess(plan, table, &result.log);
    return result;
}

json log_to_json(const std::vector<TransformAction>& log) {
    json out = json::array();
    for (const auto& a : log) {
        json j = {{"action", std::string(to_string(a.kind))}, {"column", a.column}};
        switch (a.kind) {
            case TransformAction::Kind::DropCorrelated:
                j["kept"] = a.partner;
                j["r"] = a.value;
                break;
            case TransformAction::Kind::DropConstant: break;
            case TransformAction::Kind::Impute:
                j["station"] = a.station;
                j["value"] = a.value;
                j["cells"] = a.cells;
                break;
        }
        out.push_back(std::move(j));
    }
    return out;
}

json PreprocessPlan::to_json() const {
    json cols = json::array();
    for (size_t k = 0; k < kept_columns.size(); ++k) {
        json st = json::object();
        for (const auto& [station, sn] : per_station[k]) st[station] = {sn.first, sn.second};
        cols.push_back({{"name", kept_columns[k]},
                        {"sum", totals[k].first},
                        {"count", totals[k].second},
                        {"per_station", st}});
    }
    return {{"columns", cols}, {"drops", log_to_json(drops)}};
}

PreprocessPlan PreprocessPlan::from_json(const json& j) {
    PreprocessPlan plan;
    try {
        for (const auto& c : j.at("columns")) {
            plan.kept_columns.push_back(c.at("name").get<std::string>());
            plan.totals.emplace_back(c.at("sum").get<double>(), c.at("count").get<size_t>());
            std::map<std::string, std::pair<double, size_t>> st;
            for (const auto& [station, sn] : c.at("per_station").items()) {
                st[station] = {sn.at(0).get<double>(), sn.at(1).get<size_t>()};
            }
            plan.per_station.push_back(std::move(st));
        }
        for (const auto& a : j.at("drops")) {
            TransformAction t;
            t.kind = parse_kind(a.at("action").get<std::string>());
            t.column = a.at("column").get<std::string>();
            if (t.kind == TransformAction::Kind::DropCorrelated) {
                t.partner = a.at("kept").get<std::string>();
                t.value = a.at("r").get<double>();
            }
            plan.drops.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed preprocessing plan: ") + e.what());
    }
    return plan;
}

}  // namespace bikevol::pipeline
