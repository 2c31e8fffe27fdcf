#pragma once

#include <span>

namespace genaibench {

/// Nearest-rank percentile of an ascending, non-empty range:
/// the value at rank ceil(p/100 * n), clamped to [1, n].
double nearest_rank(std::span<const double> sorted, double p);

}  // namespace genaibench
