#pragma once

#include <span>
#include <vector>

namespace codress::stats {

double mean(std::span<const double> xs);

/// Linear-interpolation percentile (q in [0, 100]) between closest ranks,
/// the same convention as numpy's default.
double percentile(std::vector<double> xs, double q);

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> ranks(std::span<const double> xs);

/// Spearman rank correlation; NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace codress::stats
