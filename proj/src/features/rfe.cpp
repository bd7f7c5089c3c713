#include "sleid/features/rfe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sleid/common/error.hpp"

namespace sleid::features {

RfeResult rfe(const FeatureMatrix& x, std::span<const int> labels, std::size_t target_k,
              const ImportanceFn& learner, double step_fraction) {
  if (target_k == 0 || target_k > x.n_cols()) {
    fail(ErrorCode::kBadConfig, "rfe target_k must be in [1, " + std::to_string(x.n_cols()) + "]");
  }
  if (labels.size() != x.n_rows()) fail(ErrorCode::kBadConfig, "rfe labels length differs from rows");
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) fail(ErrorCode::kBadConfig, "rfe step fraction must be in (0, 1)");

  RfeResult result;
  std::vector<std::string> current = x.columns;
  while (current.size() > target_k) {
    const FeatureMatrix sub = x.select_columns(current);
    const std::vector<double> imp = learner(sub, labels);
    if (imp.size() != current.size()) fail(ErrorCode::kBadConfig, "importance vector has the wrong length");
    const std::size_t remaining = current.size();
    std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(step_fraction * remaining)));
    step = std::min(step, remaining - target_k);

    // Worst first: lowest importance, then the later column.
    std::vector<std::size_t> order(remaining);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (imp[a] != imp[b]) return imp[a] < imp[b];
      return a > b;
    });
    std::vector<char> drop(remaining, 0);
    std::vector<std::string> removed;
    for (std::size_t i = 0; i < step; ++i) {
      drop[order[i]] = 1;
      removed.push_back(current[order[i]]);
    }
    std::vector<std::string> next;
    for (std::size_t i = 0; i < remaining; ++i) {
      if (!drop[i]) next.push_back(current[i]);
    }
    current = std::move(next);
    result.rounds.push_back(std::move(removed));
  }
  result.selected = std::move(current);
  return result;
}

}  // namespace sleid::features
