#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sleid/common/rng.hpp"
#include "sleid/features/matrix.hpp"
#include "sleid/trees/model.hpp"

namespace sleid::trees {

// Fold index in [0, k) for every label. Each class is shuffled and dealt
// round-robin, continuing the offset across classes, so every fold holds
// floor or ceil of n_c / k members of class c.
// Errors: k < 2 -> kBadConfig; a class present with fewer than k members -> kTooFewPerClass.
std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
};

struct SearchSpace {
  IntRange rf_n_estimators{50, 400};
  IntRange rf_max_depth{3, 20};
  IntRange rf_min_samples_split{2, 20};
  RealRange rf_class_weight{1.0, 20.0, false};
  IntRange gbdt_max_depth{2, 8};
  RealRange gbdt_learning_rate{0.01, 0.3, true};
  IntRange gbdt_n_estimators{50, 400};
  RealRange gbdt_l2{0.0, 10.0, false};

  // Errors: empty or non-finite ranges -> kBadConfig.
  void validate() const;
  RfParams sample_rf(Rng& rng, const RfParams& base = {}) const;
  GbdtParams sample_gbdt(Rng& rng, const GbdtParams& base = {}) const;
};

struct TrialRecord {
  std::size_t trial = 0;
  EnsembleKind learner = EnsembleKind::kRandomForest;
  RfParams rf;
  GbdtParams gbdt;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

struct TuneOptions {
  std::size_t budget = 20;
  int k_folds = 5;
  std::uint64_t seed = 0;
  int workers = 0;
  RfParams rf_base;      // fields outside the space (max_features)
  GbdtParams gbdt_base;  // fields outside the space (min_child_weight)
};

struct TuneResult {
  RfParams best_rf;
  GbdtParams best_gbdt;
  std::size_t best_rf_trial = 0;
  std::size_t best_gbdt_trial = 0;
  std::vector<TrialRecord> trials;  // RF record then GBDT record per trial

  std::string trial_log_csv() const;
};

// Random search. Each trial draws one RF and one GBDT configuration and
// scores each by mean illicit-class F1 over stratified folds of (rows, y).
// `extra_rows` / `extra_y` join every training split and never a validation
// split. Ties keep the earliest trial. Errors: budget 0 -> kBadConfig.
TuneResult tune(const features::FeatureMatrix& x, std::span<const std::size_t> rows, std::span<const int> y,
                std::span<const std::size_t> extra_rows, std::span<const int> extra_y,
                const SearchSpace& space, const TuneOptions& options);

}  // namespace sleid::trees
