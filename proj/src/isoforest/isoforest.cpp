#include "sleid/isoforest/isoforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/rng.hpp"

namespace sleid::isoforest {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

std::uint32_t ceil_log2(std::uint64_t n) {
  std::uint32_t d = 0;
  while ((std::uint64_t{1} << d) < n) ++d;
  return d;
}

class TreeBuilder {
 public:
  TreeBuilder(const features::FeatureMatrix& x, std::uint32_t depth_limit, Rng& rng)
      : x_(x), limit_(depth_limit), rng_(rng) {}

  IsoTree build(std::vector<std::size_t> sample) {
    sample_ = std::move(sample);
    grow(0, sample_.size(), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::size_t lo, std::size_t hi, std::uint32_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = hi - lo;
    if (depth >= limit_ || n <= 1) return leaf(id, n);

    std::vector<std::uint32_t> candidates;
    std::vector<double> mins, maxs;
    for (std::size_t c = 0; c < x_.n_cols(); ++c) {
      double mn = x_.at(sample_[lo], c), mx = mn;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        const double v = x_.at(sample_[i], c);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx > mn) {
        candidates.push_back(static_cast<std::uint32_t>(c));
        mins.push_back(mn);
        maxs.push_back(mx);
      }
    }
    if (candidates.empty()) return leaf(id, n);

    const std::size_t pick = rng_.below(candidates.size());
    const std::uint32_t f = candidates[pick];
    double split = rng_.uniform(mins[pick], maxs[pick]);
    if (!(split > mins[pick])) split = 0.5 * (mins[pick] + maxs[pick]);
    auto mid = std::partition(sample_.begin() + static_cast<std::ptrdiff_t>(lo),
                              sample_.begin() + static_cast<std::ptrdiff_t>(hi),
                              [&](std::size_t r) { return x_.at(r, f) < split; });
    const std::size_t m = static_cast<std::size_t>(mid - sample_.begin());
    const std::uint32_t l = grow(lo, m, depth + 1);
    const std::uint32_t r = grow(m, hi, depth + 1);
    IsoNode& node = tree_.nodes[id];
    node.feature = static_cast<std::int32_t>(f);
    node.split = split;
    node.left = l;
    node.right = r;
    node.size = static_cast<std::uint32_t>(n);
    return id;
  }

  std::uint32_t leaf(std::uint32_t id, std::size_t n) {
    tree_.nodes[id].size = static_cast<std::uint32_t>(n);
    return id;
  }

  const features::FeatureMatrix& x_;
  std::uint32_t limit_;
  Rng& rng_;
  std::vector<std::size_t> sample_;
  IsoTree tree_;
};

}  // namespace

std::uint32_t IsolationForestModel::depth_limit() const { return ceil_log2(subsample_size); }

double average_path_length(std::uint64_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  const double harmonic = std::log(m) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

IsolationForestModel fit(const features::FeatureMatrix& x, const IsoParams& params) {
  if (x.n_rows() < 2) fail(ErrorCode::kTooFewSamples, "isolation forest needs at least 2 rows");
  if (params.n_trees == 0) fail(ErrorCode::kBadConfig, "n_trees must be positive");
  if (params.subsample_size < 2) fail(ErrorCode::kBadConfig, "subsample_size must be at least 2");
  for (double v : x.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kSchemaError, "isolation forest input must be preprocessed");
  }
  IsolationForestModel model;
  model.n_trees = params.n_trees;
  model.subsample_size = static_cast<std::uint32_t>(std::min<std::size_t>(params.subsample_size, x.n_rows()));
  model.seed = params.seed;
  model.schema_version = x.schema_version;
  model.schema_digest = x.digest();
  model.n_features = static_cast<std::uint32_t>(x.n_cols());
  model.trees.resize(model.n_trees);
  const std::uint32_t limit = model.depth_limit();
  parallel_for(model.n_trees, params.workers, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, {0x1F, t}));
    std::vector<std::size_t> all(x.n_rows());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < model.subsample_size; ++i) {
      std::swap(all[i], all[i + rng.below(all.size() - i)]);
    }
    all.resize(model.subsample_size);
    model.trees[t] = TreeBuilder(x, limit, rng).build(std::move(all));
  });
  return model;
}

double path_length(const IsoTree& tree, std::span<const double> x) {
  std::uint32_t id = 0;
  double depth = 0.0;
  while (tree.nodes[id].feature >= 0) {
    const auto& n = tree.nodes[id];
    id = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    depth += 1.0;
  }
  return depth + average_path_length(tree.nodes[id].size);
}

double anomaly_score(const IsolationForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) fail(ErrorCode::kSchemaError, "feature count differs from the model's");
  double sum = 0.0;
  for (const auto& t : model.trees) sum += path_length(t, x);
  const double mean = sum / static_cast<double>(model.trees.size());
  const double c = average_path_length(model.subsample_size);
  return std::pow(2.0, -mean / c);
}

double anomaly_score(const IsolationForestModel& model, const features::FeatureVector& v) {
  if (v.schema_version != model.schema_version) {
    fail(ErrorCode::kSchemaError, "schema version " + std::to_string(v.schema_version) +
                                      " differs from the model's " + std::to_string(model.schema_version));
  }
  return anomaly_score(model, std::span<const double>(v.values));
}

std::vector<double> score_matrix(const IsolationForestModel& model, const features::FeatureMatrix& x,
                                 int workers) {
  if (x.digest() != model.schema_digest) fail(ErrorCode::kSchemaError, "matrix schema differs from the model's");
  std::vector<double> out(x.n_rows());
  parallel_for(out.size(), workers, [&](std::size_t r) { out[r] = anomaly_score(model, x.row(r)); });
  return out;
}

std::size_t contamination_count(std::size_t rows, double contamination) {
  constexpr std::int64_t kDen = 1'000'000'000;
  const auto num = static_cast<std::int64_t>(std::llround(contamination * static_cast<double>(kDen)));
  const auto n = static_cast<std::int64_t>(rows);
  return static_cast<std::size_t>((num * n + kDen - 1) / kDen);
}

Partition partition_unknowns(const IsolationForestModel& model, const features::FeatureMatrix& unknowns,
                             double contamination, int workers) {
  if (unknowns.n_rows() == 0) fail(ErrorCode::kEmptyInput, "no unknown rows to partition");
  if (!(contamination > 0.0 && contamination < 0.5)) fail(ErrorCode::kBadConfig, "contamination must be in (0, 0.5)");
  Partition p;
  p.scores = score_matrix(model, unknowns, workers);
  std::vector<std::size_t> order(unknowns.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (p.scores[a] != p.scores[b]) return p.scores[a] > p.scores[b];
    return unknowns.rows[a] < unknowns.rows[b];
  });
  const std::size_t k = contamination_count(unknowns.n_rows(), contamination);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < k ? p.pseudo_illicit : p.filtered_unknown).push_back(unknowns.rows[order[i]]);
  }
  std::sort(p.pseudo_illicit.begin(), p.pseudo_illicit.end());
  std::sort(p.filtered_unknown.begin(), p.filtered_unknown.end());
  return p;
}

std::string serialize_model(const IsolationForestModel& m) {
  ByteWriter w;
  w.raw(kIsoMagic);
  w.u32(kIsoFormatVersion);
  w.u64(m.seed);
  w.u32(m.n_trees);
  w.u32(m.subsample_size);
  w.u32(m.schema_version);
  w.u64(m.schema_digest);
  w.u32(m.n_features);
  for (const auto& t : m.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.split);
      w.u32(n.left);
      w.u32(n.right);
      w.u32(n.size);
    }
  }
  return w.take();
}

IsolationForestModel deserialize_model(std::string_view bytes) {
  ByteReader rd(bytes);
  rd.expect_magic(kIsoMagic);
  if (rd.u32() != kIsoFormatVersion) fail(ErrorCode::kFormatError, "unsupported SLIF version");
  IsolationForestModel m;
  m.seed = rd.u64();
  m.n_trees = rd.u32();
  m.subsample_size = rd.u32();
  m.schema_version = rd.u32();
  m.schema_digest = rd.u64();
  m.n_features = rd.u32();
  if (m.n_trees > rd.remaining()) fail(ErrorCode::kFormatError, "SLIF container truncated");
  m.trees.resize(m.n_trees);
  for (auto& t : m.trees) {
    const std::uint32_t count = rd.u32();
    if (static_cast<std::size_t>(count) * 24 > rd.remaining()) fail(ErrorCode::kFormatError, "SLIF container truncated");
    t.nodes.resize(count);
    for (auto& n : t.nodes) {
      n.feature = rd.i32();
      n.split = rd.f64();
      n.left = rd.u32();
      n.right = rd.u32();
      n.size = rd.u32();
      if (n.feature >= 0 && (n.left >= count || n.right >= count ||
                             static_cast<std::uint32_t>(n.feature) >= m.n_features)) {
        fail(ErrorCode::kFormatError, "SLIF node references out of range");
      }
    }
    if (t.nodes.empty()) fail(ErrorCode::kFormatError, "SLIF tree without nodes");
  }
  if (!rd.at_end()) fail(ErrorCode::kFormatError, "trailing bytes in SLIF container");
  return m;
}

}  // namespace sleid::isoforest
