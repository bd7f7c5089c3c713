#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleid/features/matrix.hpp"
#include "sleid/metrics/metrics.hpp"
#include "sleid/trees/voting.hpp"

namespace sleid::selftrain {

// Hyperparameters of the two voting members; reused unchanged by every refit.
struct LearnerConfig {
  trees::RfParams rf;
  trees::GbdtParams gbdt;
};

trees::VotingModel fit_voting(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                              std::span<const int> y, const LearnerConfig& config, std::uint64_t seed,
                              int workers = 0);

struct SelfTrainParams {
  double confidence = 0.9;
  int max_iters = 5;
  int workers = 0;
};

struct IterationRecord {
  int iteration = 0;  // 1-based; iteration 1 is the base model
  std::size_t train_size = 0;
  std::size_t pool_before = 0;
  std::size_t admitted_licit = 0;    // admitted after scoring with this iteration's model
  std::size_t admitted_illicit = 0;
  metrics::MetricReport validation;
};

struct FoldRun {
  int fold = 0;
  std::vector<IterationRecord> iterations;
  int retained_iteration = 1;
  std::vector<std::size_t> validation_rows;
  std::vector<int> validation_labels;
  std::vector<double> retained_p1;  // retained model's illicit probability per validation row
  std::optional<trees::VotingModel> retained_model;
};

// One self-training run. `train_rows` / `train_y` are the labeled training
// split; `pool_rows` the filtered-unknown pool; validation rows never receive
// pseudo-labels. Admissions are append-only. The retained iteration has the
// highest validation illicit recall (earliest on ties).
// Errors: confidence outside (0.5, 1) or max_iters < 1 -> kBadConfig.
FoldRun self_train(const features::FeatureMatrix& x, std::span<const std::size_t> train_rows,
                   std::span<const int> train_y, std::span<const std::size_t> validation_rows,
                   std::span<const int> validation_y, std::span<const std::size_t> pool_rows,
                   const LearnerConfig& config, const SelfTrainParams& params, std::uint64_t seed,
                   bool keep_model = false);

// Fits without validation for a fixed number of iterations (admissions from
// iterations 1..iterations-1 feed the final refit).
struct FinalFit {
  trees::VotingModel model;
  std::vector<std::size_t> admitted_rows;
  std::vector<int> admitted_labels;
};
FinalFit self_train_fixed(const features::FeatureMatrix& x, std::span<const std::size_t> train_rows,
                          std::span<const int> train_y, std::span<const std::size_t> pool_rows,
                          const LearnerConfig& config, const SelfTrainParams& params, int iterations,
                          std::uint64_t seed);

struct TrainingRun {
  std::vector<FoldRun> folds;
  // Out-of-fold evaluation of the retained models over every labeled row.
  metrics::MetricReport pooled;
  int modal_retained_iteration = 1;

  nlohmann::ordered_json to_json() const;
  // fold,iteration,train_size,pool_before,admitted_licit,admitted_illicit,
  // precision,recall,f1,accuracy,retained
  std::string curve_csv() const;
};

// Cross-validated self-training over the labeled rows. `extra_rows` (with
// labels) join every training split and never a validation split.
TrainingRun cross_validate(const features::FeatureMatrix& x, std::span<const std::size_t> labeled_rows,
                           std::span<const int> labels, std::span<const std::size_t> extra_rows,
                           std::span<const int> extra_labels, std::span<const std::size_t> pool_rows,
                           const LearnerConfig& config, const SelfTrainParams& params, int k_folds,
                           std::uint64_t seed);

}  // namespace sleid::selftrain
