#include "sleid/trees/model.hpp"

#include <algorithm>
#include <cmath>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"

namespace sleid::trees {

std::string_view kind_name(EnsembleKind kind) {
  return kind == EnsembleKind::kRandomForest ? "random_forest" : "gradient_boosted";
}

double Tree::leaf_value(std::span<const double> x) const {
  std::uint32_t id = 0;
  while (nodes[id].feature >= 0) {
    const auto& n = nodes[id];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[id].value;
}

std::uint32_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::uint32_t> d(nodes.size(), 0);
  std::uint32_t best = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double TreeEnsembleModel::predict_p1(std::span<const double> x) const {
  if (x.size() != n_features) fail(ErrorCode::kSchemaError, "feature count differs from the model's");
  if (kind == EnsembleKind::kRandomForest) {
    if (trees.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : trees) sum += t.leaf_value(x);
    return sum / static_cast<double>(trees.size());
  }
  double score = base_score;
  for (const auto& t : trees) score += t.leaf_value(x);
  return 1.0 / (1.0 + std::exp(-score));
}

std::array<double, 2> TreeEnsembleModel::predict_proba(std::span<const double> x) const {
  const double p1 = predict_p1(x);
  return {1.0 - p1, p1};
}

std::vector<double> TreeEnsembleModel::predict_p1(const features::FeatureMatrix& x, int workers) const {
  if (x.digest() != schema_digest) fail(ErrorCode::kSchemaError, "matrix schema differs from the model's");
  std::vector<double> out(x.n_rows());
  parallel_for(out.size(), workers, [&](std::size_t r) { out[r] = predict_p1(x.row(r)); });
  return out;
}

}  // namespace sleid::trees
