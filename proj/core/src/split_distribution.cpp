#include "qtmtt/split_distribution.hpp"

#include <algorithm>
#include <cmath>

#include "qtmtt/error.hpp"

namespace qtmtt {

SplitDistribution SplitDistribution::uniform(SplitSet legal) {
  SplitDistribution d;
  const double p = 1.0 / legal.size();
  for (SplitType s : kAllSplitTypes) {
    if (legal.contains(s)) d[s] = p;
  }
  return d;
}

SplitDistribution SplitDistribution::one_hot(SplitType s) {
  SplitDistribution d;
  d[s] = 1.0;
  return d;
}

bool is_valid_distribution(const SplitDistribution& d, SplitSet legal, double tol) {
  double sum = 0.0;
  for (SplitType s : kAllSplitTypes) {
    const double p = d[s];
    if (!std::isfinite(p) || p < 0.0) return false;
    if (!legal.contains(s) && p != 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

SplitDistribution mask_and_normalize(const SplitDistribution& d, SplitSet legal) {
  SplitDistribution out;
  double sum = 0.0;
  for (SplitType s : kAllSplitTypes) {
    if (legal.contains(s)) {
      out[s] = std::max(0.0, d[s]);
      sum += out[s];
    }
  }
  if (!(sum > 0.0)) return SplitDistribution::uniform(legal);
  for (auto& p : out.probs) p /= sum;
  return out;
}

std::vector<SplitType> top_n(const SplitDistribution& d, SplitSet legal, int n) {
  if (n < 1 || n > legal.size()) {
    fail(ErrorKind::kInvalidArgument,
         "top_n: n=" + std::to_string(n) + " outside [1, " + std::to_string(legal.size()) + "]");
  }
  std::vector<SplitType> order = legal.to_vector();
  std::stable_sort(order.begin(), order.end(), [&](SplitType a, SplitType b) { return d[a] > d[b]; });
  order.resize(static_cast<std::size_t>(n));
  return order;
}

}  // namespace qtmtt
