#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

namespace loyalda::testing {

/// Pearson chi-square statistic of observed counts against a uniform law.
inline double chi_square_uniform(const std::vector<std::uint64_t>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return stat;
}

/// Total-variation distance between an empirical histogram and the uniform
/// law on `support` outcomes (outcomes missing from the map count as zero).
template <class Key>
double tv_from_uniform(const std::map<Key, std::uint64_t>& counts, std::size_t support) {
  double total = 0;
  for (const auto& [_, c] : counts) total += static_cast<double>(c);
  const double p = 1.0 / static_cast<double>(support);
  double tv = 0;
  for (const auto& [_, c] : counts) tv += std::abs(static_cast<double>(c) / total - p);
  tv += p * static_cast<double>(support - counts.size());
  return tv / 2;
}

inline std::uint64_t factorial(std::uint64_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace loyalda::testing
