// Small hand-built feature table shared by the eval and analysis tests.
#pragma once

#include <cmath>
#include <string>

#include "bikevol/core/rng.hpp"
#include "bikevol/pipeline/feature_table.hpp"

namespace toy {

using namespace bikevol;
using pipeline::FeatureGroup;
using pipeline::FeatureTable;

// Four long-term stations over two years plus one short-term station; one feature is
// missing at one station so the fold-level imputation has work to do.
inline FeatureTable toy_table(std::uint64_t seed = 1) {
    Rng rng(seed);
    FeatureTable t;
    t.columns = {{"level", FeatureGroup::Infrastructure, {}},
                 {"temp", FeatureGroup::Weather, {}},
                 {"weekend", FeatureGroup::Time, {}},
                 {"socio", FeatureGroup::Socioeconomic, {}}};
    auto add = [&](const std::string& id, StationKind kind, Date d, double level) {
        const double temp = rng.uniform(0, 25);
        const double weekend = weekday_index(d) >= 5 ? 1 : 0;
        t.station_ids.push_back(id);
        t.station_kinds.push_back(kind);
        t.dates.push_back(d);
        t.target.push_back(std::round(level * (1 + 0.03 * temp) * (weekend ? 0.7 : 1.0) * (0.9 + 0.2 * rng.uniform())));
        t.columns[0].values.push_back(level);
        t.columns[1].values.push_back(temp);
        t.columns[2].values.push_back(weekend);
        t.columns[3].values.push_back(id == "S2" ? std::nan("") : level / 100);
    };
    const double levels[] = {800, 1500, 2500, 4000};
    for (int s = 0; s < 4; ++s) {
        const int n = 40 + 5 * s;
        for (int y : {2019, 2022})
            for (int k = 0; k < n; ++k) add("S" + std::to_string(s + 1), StationKind::LongTerm, make_date(y, 5, 1) + std::chrono::days(k), levels[s]);
    }
    for (int k = 0; k < 6; ++k) add("Q1", StationKind::ShortTerm, make_date(2019, 6, 3) + std::chrono::days(7 * k), 2000);
    return t;
}

}  // namespace toy
