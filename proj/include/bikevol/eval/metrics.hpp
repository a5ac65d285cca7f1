#pragma once

#include <span>
#include <string_view>

namespace bikevol::eval {

// Mean absolute error. Throws ComputeError on empty or mismatched inputs.
double mae(std::span<const double> y, std::span<const double> yhat);

// Symmetric MAPE in percent, range [0, 200]. A term with y = yhat = 0 contributes 0.
// Inputs must be non-negative.
double smape(std::span<const double> y, std::span<const double> yhat);

enum class Metric { MAE, SMAPE };
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);
double score(Metric metric, std::span<const double> y, std::span<const double> yhat);

}  // namespace bikevol::eval
