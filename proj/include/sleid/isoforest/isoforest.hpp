#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/features/extract.hpp"
#include "sleid/features/matrix.hpp"

namespace sleid::isoforest {

struct IsoNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double split = 0.0;         // x[feature] < split goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;     // training points reaching a leaf

  bool operator==(const IsoNode&) const = default;
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root
  bool operator==(const IsoTree&) const = default;
};

struct IsolationForestModel {
  std::uint32_t n_trees = 0;
  std::uint32_t subsample_size = 0;  // effective psi used for every tree
  std::uint64_t seed = 0;
  std::uint32_t schema_version = 0;
  std::uint64_t schema_digest = 0;
  std::uint32_t n_features = 0;
  std::vector<IsoTree> trees;

  std::uint32_t depth_limit() const;
  bool operator==(const IsolationForestModel&) const = default;
};

struct IsoParams {
  std::uint32_t n_trees = 100;
  std::uint32_t subsample_size = 256;  // clamped to the row count
  std::uint64_t seed = 0;
  int workers = 0;
};

// Average unsuccessful-search path length in a BST of n points.
// c(0) = c(1) = 0, c(2) = 1, otherwise 2 H(n-1) - 2 (n-1)/n.
double average_path_length(std::uint64_t n);

// Throws kTooFewSamples below two rows.
IsolationForestModel fit(const features::FeatureMatrix& x, const IsoParams& params = {});

double path_length(const IsoTree& tree, std::span<const double> x);
double anomaly_score(const IsolationForestModel& model, std::span<const double> x);
// Throws kSchemaError when the vector's schema version differs.
double anomaly_score(const IsolationForestModel& model, const features::FeatureVector& v);
// Throws kSchemaError when the matrix digest differs from the model's.
std::vector<double> score_matrix(const IsolationForestModel& model, const features::FeatureMatrix& x,
                                 int workers = 0);

// ceil(contamination * rows), computed on a 1e-9 rational grid so decimal
// rates such as 0.005 count exactly.
std::size_t contamination_count(std::size_t rows, double contamination);

struct Partition {
  std::vector<std::string> pseudo_illicit;    // sorted
  std::vector<std::string> filtered_unknown;  // sorted
  std::vector<double> scores;                 // per input row
};

// Top-k cut by (score desc, address asc). Errors: empty -> kEmptyInput,
// contamination outside (0, 0.5) -> kBadConfig.
Partition partition_unknowns(const IsolationForestModel& model, const features::FeatureMatrix& unknowns,
                             double contamination = 0.005, int workers = 0);

std::string serialize_model(const IsolationForestModel& model);
IsolationForestModel deserialize_model(std::string_view bytes);

inline constexpr std::string_view kIsoMagic{"SLIF\x01", 5};
inline constexpr std::uint32_t kIsoFormatVersion = 1;

}  // namespace sleid::isoforest
