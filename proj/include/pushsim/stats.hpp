#pragma once

#include <string>
#include <utility>
#include <vector>

namespace pushsim {

struct Sample {
    std::vector<double> values;
    std::string unit;  // "s", "ms", ... carried through to output labels
};

// Right-continuous ECDF: one (value, fraction of sample <= value) pair per
// distinct value, ascending; the last fraction is 1. Empty sample throws.
std::vector<std::pair<double, double>> ecdf(const Sample& sample);

// Step-function evaluation: 0 below the smallest value.
double ecdf_eval(const std::vector<std::pair<double, double>>& steps, double x);

struct Quantiles {
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
};

// Linear interpolation of order statistics (quantile type 7). Empty throws.
Quantiles quantiles(const Sample& sample);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_mad = 0.0;  // median absolute residual
};

// Least-squares line through (x, y) points. Fewer than two distinct x values
// throws.
RegressionFit ols_fit(const std::vector<std::pair<double, double>>& points);

} // namespace pushsim
