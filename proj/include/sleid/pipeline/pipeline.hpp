#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sleid/common/error.hpp"
#include "sleid/expand/expand.hpp"
#include "sleid/features/matrix.hpp"
#include "sleid/features/rfe.hpp"
#include "sleid/isoforest/isoforest.hpp"
#include "sleid/pipeline/config.hpp"
#include "sleid/riskrate/risk.hpp"
#include "sleid/selftrain/selftrain.hpp"
#include "sleid/trees/cv.hpp"
#include "sleid/txgraph/graph.hpp"

namespace sleid::pipeline {

// Error raised by a pipeline stage; keeps the underlying code.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& message)
      : Error(code, stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Runs fn, rethrowing any sleid::Error as a StageError tagged with `stage`.
template <typename Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(stage), e.code(), e.what());
  }
}

// address,label,layer,reason
std::vector<expand::CoreEntry> parse_core_csv(std::string_view text);

// Newline-delimited addresses, '#' comments allowed.
std::vector<std::string> parse_address_list(std::string_view text);

// Training roles of the core rows (matrix row order = core order).
struct CoreSplit {
  std::vector<std::size_t> labeled_rows;
  std::vector<int> labels;
  std::vector<std::size_t> unknown_rows;
  std::size_t risk_rule_licit = 0;  // unknown admissions labeled licit by the risk rule
};

// Seeds and label-file entries keep their class; unknown low-risk admissions
// are licit by the risk rule; unknown DeFi admissions form the unknown pool.
CoreSplit split_core(const std::vector<expand::CoreEntry>& core);

struct Featurized {
  features::FeatureMatrix raw;
  features::Preprocessor preprocessor;
  features::PreprocessReport preprocess_report;
  features::RfeResult rfe;
  features::FeatureMatrix x;  // preprocessed, selected columns
};

// Extracts the core's features, preprocesses them and runs RFE with random
// forest importances on the labeled rows.
Featurized featurize(const txgraph::LedgerGraph& graph, const std::vector<expand::CoreEntry>& core,
                     const PipelineConfig& config);

// Applies a fitted preprocessor and column selection to new rows.
features::FeatureMatrix transform(const features::FeatureMatrix& raw, const features::Preprocessor& pre,
                                  const std::vector<std::string>& selected);

struct PseudoLabels {
  isoforest::IsolationForestModel model;
  isoforest::Partition partition;
  std::vector<std::size_t> pseudo_illicit_rows;  // matrix rows, ascending
  std::vector<std::size_t> filtered_rows;        // matrix rows, ascending
};

// Isolation forest over the unknown rows; the top `contamination` share
// becomes pseudo-illicit.
PseudoLabels assign_pseudo_labels(const features::FeatureMatrix& x, const CoreSplit& split,
                                  const PipelineConfig& config);

trees::TuneResult tune_learners(const features::FeatureMatrix& x, const CoreSplit& split,
                                const PseudoLabels& pseudo, const PipelineConfig& config);

struct ModeResult {
  TrainingMode mode = TrainingMode::kSleid;
  selftrain::TrainingRun run;
  selftrain::FinalFit final_fit;
  int final_iterations = 1;
};

// Cross-validated training under one ablation protocol plus the final refit
// on every labeled row.
//   supervised_only: labeled rows only, no self-training
//   if_supervised:   labeled rows + pseudo-illicit rows, no self-training
//   sleid:           labeled rows + pseudo-illicit rows + self-training on the pool
ModeResult train_mode(const features::FeatureMatrix& x, const CoreSplit& split, const PseudoLabels& pseudo,
                      const selftrain::LearnerConfig& learners, TrainingMode mode, const PipelineConfig& config);

// Mean drop in illicit F1 when one column is shuffled, per column.
std::vector<double> permutation_importance(const trees::VotingModel& model, const features::FeatureMatrix& x,
                                           const std::vector<std::size_t>& rows, const std::vector<int>& y,
                                           std::uint64_t seed, int repeats = 3);

struct PipelineInputs {
  const txgraph::LedgerGraph* graph = nullptr;
  std::vector<std::string> seeds;
  const riskrate::DefiRegistry* registry = nullptr;
  const txgraph::LabelBook* labels = nullptr;
};

struct PipelineResult {
  expand::ExpansionState expansion;
  CoreSplit split;
  Featurized features;
  PseudoLabels pseudo;
  trees::TuneResult tuning;
  selftrain::LearnerConfig learners;
  std::vector<ModeResult> modes;  // the configured mode first, then the others when ablating
  nlohmann::ordered_json report;  // no timings or worker counts

  const ModeResult& primary() const { return modes.front(); }
  std::string report_text() const;
  // address,p_illicit,predicted,role for every core row, scored by the primary final model.
  std::string predictions_csv() const;
};

// In-memory pipeline over an already ingested graph.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

// File-driven pipeline: reads the configured inputs, runs every stage and
// persists every intermediate artifact under config.out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace sleid::pipeline
