#pragma once

#include <array>
#include <vector>

#include "qtmtt/partition.hpp"

namespace qtmtt {

// Probabilities over the six split types, indexed canonically.
struct SplitDistribution {
  std::array<double, kNumSplitTypes> probs{};

  double operator[](SplitType s) const { return probs[static_cast<std::size_t>(index_of(s))]; }
  double& operator[](SplitType s) { return probs[static_cast<std::size_t>(index_of(s))]; }

  static SplitDistribution uniform(SplitSet legal);
  static SplitDistribution one_hot(SplitType s);
};

inline constexpr double kDistributionTolerance = 1e-6;

// Non-negative, zero on every illegal class, legal mass sums to one.
bool is_valid_distribution(const SplitDistribution& d, SplitSet legal,
                           double tol = kDistributionTolerance);

// Zero the illegal classes and renormalise the rest. All-zero legal mass
// falls back to uniform over the legal set.
SplitDistribution mask_and_normalize(const SplitDistribution& d, SplitSet legal);

// The n legal classes of highest probability, descending, ties broken by the
// lower canonical index. Throws unless 1 <= n <= |legal|.
std::vector<SplitType> top_n(const SplitDistribution& d, SplitSet legal, int n);

}  // namespace qtmtt
