#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sleid/features/matrix.hpp"

namespace sleid::features {

// Fits a learner on (X, y) and returns one non-negative importance per column
// of X. Must be deterministic for the RFE result to be.
using ImportanceFn = std::function<std::vector<double>(const FeatureMatrix& x, std::span<const int> y)>;

struct RfeResult {
  std::vector<std::string> selected;            // in the input column order
  std::vector<std::vector<std::string>> rounds;  // columns removed per round
};

// Repeatedly drops the `step` least important columns until `target_k` remain,
// with step = max(1, floor(step_fraction * remaining)) capped so the target
// is hit exactly. Equal importances drop the later column first.
// Errors: target_k == 0 or > columns -> kBadConfig.
RfeResult rfe(const FeatureMatrix& x, std::span<const int> labels, std::size_t target_k,
              const ImportanceFn& learner, double step_fraction = 0.1);

}  // namespace sleid::features
