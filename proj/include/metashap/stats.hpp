#pragma once

#include <span>
#include <vector>

namespace metashap {

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

double pearson(std::span<const double> a, std::span<const double> b);

} // namespace metashap
