#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sleid {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Summary used for the *_mean/_max/_min/_median/_std feature families.
// Empty input gives all-missing; std needs two values (sample std, n-1).
struct Summary {
  double mean = kMissing;
  double max = kMissing;
  double min = kMissing;
  double median = kMissing;
  double std = kMissing;
};

Summary summarize(std::vector<double> values);

double mean_of(std::span<const double> values);
double sample_std(std::span<const double> values);

// 1-based nearest rank: ceil(percent/100 * n). Requires n >= 1.
std::size_t nearest_rank(std::size_t n, double percent);

// Nearest-rank percentile of an already sorted range.
double nearest_rank_percentile(std::span<const double> sorted, double percent);

// FNV-1a 64-bit, used for schema digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string hex64(std::uint64_t v);

}  // namespace sleid
