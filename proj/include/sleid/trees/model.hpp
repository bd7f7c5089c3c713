#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/features/matrix.hpp"

namespace sleid::trees {

enum class EnsembleKind : std::uint8_t { kRandomForest = 0, kGradientBoosted = 1 };

std::string_view kind_name(EnsembleKind kind);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;         // RF: illicit probability; GBDT: additive score

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double leaf_value(std::span<const double> x) const;
  std::uint32_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct RfParams {
  std::uint32_t n_estimators = 100;
  std::uint32_t max_depth = 12;
  std::uint32_t min_samples_split = 2;
  double class_weight = 1.0;  // weight of the illicit class; licit is 1
  std::uint32_t max_features = 0;  // 0 -> floor(sqrt(n_features))

  bool operator==(const RfParams&) const = default;
};

struct GbdtParams {
  std::uint32_t n_estimators = 100;
  std::uint32_t max_depth = 4;
  double learning_rate = 0.1;
  double l2 = 1.0;
  double min_child_weight = 1.0;  // minimum hessian sum per child

  bool operator==(const GbdtParams&) const = default;
};

struct TreeEnsembleModel {
  EnsembleKind kind = EnsembleKind::kRandomForest;
  std::uint64_t seed = 0;
  RfParams rf;
  GbdtParams gbdt;
  std::array<double, 2> class_weights{1.0, 1.0};
  std::uint32_t schema_version = 0;
  std::uint64_t schema_digest = 0;
  std::uint32_t n_features = 0;
  double base_score = 0.0;  // GBDT initial log-odds
  std::vector<Tree> trees;
  // Total split gain per feature, normalised to sum to 1 (all zero without splits).
  std::vector<double> importances;

  double predict_p1(std::span<const double> x) const;
  std::array<double, 2> predict_proba(std::span<const double> x) const;
  // Throws kSchemaError on digest mismatch.
  std::vector<double> predict_p1(const features::FeatureMatrix& x, int workers = 0) const;

  bool operator==(const TreeEnsembleModel&) const = default;
};

}  // namespace sleid::trees
