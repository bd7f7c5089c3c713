#include "sleid/common/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sleid {

double mean_of(std::span<const double> values) {
  if (values.empty()) return kMissing;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return kMissing;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.std = sample_std(values);
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

std::size_t nearest_rank(std::size_t n, double percent) {
  // percent * n is exact for integral percents, so the ceiling is too.
  const double x = percent * static_cast<double>(n) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(x));
  return std::clamp<std::size_t>(rank, 1, n);
}

double nearest_rank_percentile(std::span<const double> sorted, double percent) {
  return sorted[nearest_rank(sorted.size(), percent) - 1];
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace sleid
