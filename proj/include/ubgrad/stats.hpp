#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ubgrad {

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // unbiased
double median(std::vector<double> v);        // by copy

/// Least-squares slope of y against x.
double linreg_slope(std::span<const double> x, std::span<const double> y);

/// Two-regressor least squares y ~ a + b1 x1 + b2 x2; returns (b1, b2).
std::pair<double, double> linreg_slope2(std::span<const double> x1,
                                        std::span<const double> x2,
                                        std::span<const double> y);

/// Upper tail of the chi-square distribution.
double chi_square_pvalue(double stat, int dof);

/// Goodness-of-fit p-value for observed counts against a pmf; bins with
/// expected count below 5 are merged into their predecessor.
double chi_square_gof_pvalue(std::span<const std::int64_t> counts,
                             std::span<const double> probs);

}  // namespace ubgrad
