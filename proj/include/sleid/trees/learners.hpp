#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sleid/features/matrix.hpp"
#include "sleid/trees/model.hpp"

namespace sleid::trees {

// Training rows are `rows` of `x` with labels `y` (0 licit, 1 illicit), one
// label per selected row. Input must be finite (preprocessed).
// Errors: one class only -> kDegenerateLabels; bad params -> kBadConfig.
TreeEnsembleModel fit_random_forest(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                                    std::span<const int> y, const RfParams& params, std::uint64_t seed,
                                    int workers = 0);
TreeEnsembleModel fit_random_forest(const features::FeatureMatrix& x, std::span<const int> y,
                                    const RfParams& params, std::uint64_t seed, int workers = 0);

TreeEnsembleModel fit_gbdt(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                           std::span<const int> y, const GbdtParams& params, std::uint64_t seed);
TreeEnsembleModel fit_gbdt(const features::FeatureMatrix& x, std::span<const int> y,
                           const GbdtParams& params, std::uint64_t seed);

}  // namespace sleid::trees
