#pragma once

#include <vector>

namespace cet {

double mean_of(const std::vector<double>& values);

// Unbiased sample variance; 0 when fewer than two values.
double variance_of(const std::vector<double>& values);

// Linear-interpolation quantile of an ascending-sorted vector, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

double normal_cdf(double z);

}  // namespace cet
