#include "genaibench/stats.hpp"

#include <algorithm>
#include <cmath>

#include "genaibench/error.hpp"

namespace genaibench {

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw PreconditionError("percentile of an empty range");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace genaibench
