#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rqo {

// Pairwise summation over a fixed index order. All mean/variance reductions
// go through this so results do not depend on the evaluation schedule.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

// Population variance (divides by n).
double population_variance(std::span<const double> xs);

// Linear-interpolation quantile; q in [0, 1].
double quantile(std::vector<double> xs, double q);

double clamp_selectivity(double v);

// Stable decimal rendering shared by all text reports.
std::string fmt_double(double v);

std::uint64_t fnv1a64(const std::string& bytes,
                      std::uint64_t seed = 14695981039346656037ull);
std::string to_hex(std::uint64_t v);

}  // namespace rqo
