#include "bikevol/eval/metrics.hpp"

#include <cmath>

#include "bikevol/core/errors.hpp"

namespace bikevol::eval {

namespace {

void check(std::span<const double> y, std::span<const double> yhat, const char* name) {
    if (y.empty() || y.size() != yhat.size()) {
        throw ComputeError(std::string(name) + ": inputs must be non-empty and of equal length");
    }
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
    check(y, yhat, "mae");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double smape(std::span<const double> y, std::span<const double> yhat) {
    check(y, yhat, "smape");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] >= 0.0) || !(yhat[i] >= 0.0)) throw ComputeError("smape: values must be non-negative");
        const double denom = 0.5 * (y[i] + yhat[i]);
        if (denom > 0.0) s += std::abs(y[i] - yhat[i]) / denom;
    }
    return 100.0 * s / static_cast<double>(y.size());
}

std::string_view to_string(Metric metric) { return metric == Metric::MAE ? "mae" : "smape"; }

Metric parse_metric(std::string_view text) {
    if (text == "mae") return Metric::MAE;
    if (text == "smape") return Metric::SMAPE;
    throw ConfigError("unknown metric '" + std::string(text) + "' (mae, smape)");
}

double score(Metric metric, std::span<const double> y, std::span<const double> yhat) {
    return metric == Metric::MAE ? mae(y, yhat) : smape(y, yhat);
}

}  // namespace bikevol::eval
