#include "pushsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pushsim/errors.hpp"

namespace pushsim {

namespace {

double type7_quantile(const std::vector<double>& sorted, double p) {
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

std::vector<std::pair<double, double>> ecdf(const Sample& sample) {
    if (sample.values.empty()) throw StatsError("ecdf needs a non-empty sample");
    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::pair<double, double>> steps;
    double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        steps.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return steps;
}

double ecdf_eval(const std::vector<std::pair<double, double>>& steps, double x) {
    double frac = 0.0;
    for (const auto& [value, cumulative] : steps) {
        if (value > x) break;
        frac = cumulative;
    }
    return frac;
}

Quantiles quantiles(const Sample& sample) {
    if (sample.values.empty())
        throw StatsError("quantiles need a non-empty sample");
    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());
    return Quantiles{type7_quantile(sorted, 0.25), type7_quantile(sorted, 0.5),
                     type7_quantile(sorted, 0.75)};
}

RegressionFit ols_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2)
        throw StatsError("regression needs at least two points");

    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0)
        throw StatsError("regression needs at least two distinct x values");

    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;

    std::vector<double> abs_residuals;
    abs_residuals.reserve(points.size());
    for (const auto& [x, y] : points)
        abs_residuals.push_back(std::abs(y - (fit.slope * x + fit.intercept)));
    std::sort(abs_residuals.begin(), abs_residuals.end());
    fit.residual_mad = type7_quantile(abs_residuals, 0.5);
    return fit;
}

} // namespace pushsim
