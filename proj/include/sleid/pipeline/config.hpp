#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sleid/riskrate/risk.hpp"
#include "sleid/trees/cv.hpp"

namespace sleid::pipeline {

enum class TrainingMode { kSupervisedOnly, kIfSupervised, kSleid };

std::string_view mode_name(TrainingMode mode);
TrainingMode parse_mode(std::string_view s);  // throws kBadConfig

struct PipelineConfig {
  // [paths]
  std::string records;   // JSONL / CSV (optionally .gz) or .slgraph
  std::string labels;    // address,label
  std::string registry;  // DeFi contract list
  std::string seeds;     // optional; defaults to the illicit entries of `labels`
  std::string out_dir = "sleid-out";

  // [run]
  std::uint64_t seed = 42;
  int workers = 0;
  TrainingMode mode = TrainingMode::kSleid;
  bool ablation = false;
  bool drop_failed = false;

  // [expand]
  double ratio_threshold = 0.01;
  int max_layers = 10;

  // [risk]
  riskrate::RiskParams risk;

  // [features]
  double clip_percentile = 99.0;
  std::size_t rfe_target = 30;
  double rfe_step = 0.1;
  std::uint32_t rfe_trees = 50;
  std::uint32_t rfe_max_depth = 8;

  // [isoforest]
  double contamination = 0.005;
  std::uint32_t iso_trees = 100;
  std::uint32_t iso_subsample = 256;

  // [tune]
  std::size_t tuner_budget = 20;
  trees::SearchSpace space;

  // [train]
  int k_folds = 5;
  double confidence = 0.9;
  int max_iters = 5;

  // Throws kBadConfig on out-of-range values.
  void validate() const;

  // Fully resolved configuration, every key in file order.
  nlohmann::ordered_json to_json() const;
  std::string to_ini() const;
};

// Sectioned key = value file. Unknown sections or keys -> kBadConfig.
PipelineConfig parse_config(std::string_view ini_text);
PipelineConfig load_config(const std::string& path);

// Applies "section.key=value" (or "section.key", "value"); unknown -> kBadConfig.
void set_option(PipelineConfig& config, std::string_view dotted_key, std::string_view value);
void apply_override(PipelineConfig& config, std::string_view assignment);

// Every recognised "section.key".
std::vector<std::string> option_names();

}  // namespace sleid::pipeline
