#include "sleid/trees/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/rng.hpp"

namespace sleid::trees {

namespace {

// Column-major copy of the training rows with one presorted order per feature.
struct Dataset {
  std::size_t n = 0;
  std::size_t f = 0;
  std::vector<double> col;
  std::vector<std::vector<std::uint32_t>> sorted;

  double v(std::size_t feat, std::uint32_t row) const { return col[feat * n + row]; }
};

Dataset make_dataset(const features::FeatureMatrix& x, std::span<const std::size_t> rows) {
  Dataset d;
  d.n = rows.size();
  d.f = x.n_cols();
  d.col.resize(d.n * d.f);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto r = x.row(rows[i]);
    for (std::size_t j = 0; j < d.f; ++j) {
      if (!std::isfinite(r[j])) fail(ErrorCode::kSchemaError, "tree learners need preprocessed (finite) input");
      d.col[j * d.n + i] = r[j];
    }
  }
  d.sorted.resize(d.f);
  for (std::size_t j = 0; j < d.f; ++j) {
    auto& s = d.sorted[j];
    s.resize(d.n);
    std::iota(s.begin(), s.end(), 0u);
    const double* c = d.col.data() + j * d.n;
    std::stable_sort(s.begin(), s.end(), [c](std::uint32_t a, std::uint32_t b) { return c[a] < c[b]; });
  }
  return d;
}

enum class Criterion { kGini, kNewton };

struct BuildConfig {
  Criterion criterion = Criterion::kGini;
  std::uint32_t max_depth = 1;
  std::uint32_t min_samples_split = 2;
  double min_child_weight = 0.0;
  std::size_t mtry = 0;  // 0 -> every feature
  double l2 = 0.0;
  double learning_rate = 1.0;
};

// Per-row statistics: Gini uses (weighted licit, weighted illicit);
// Newton uses (gradient, hessian).
struct Stats {
  double a = 0.0;
  double b = 0.0;
  std::uint32_t count = 0;
};

class LevelBuilder {
 public:
  LevelBuilder(const Dataset& d, std::span<const double> a, std::span<const double> b,
               const BuildConfig& cfg, std::vector<double>& importance)
      : d_(d), a_(a), b_(b), cfg_(cfg), importance_(importance) {}

  // `in_sample` rows take part; the others are ignored.
  Tree build(const std::vector<char>& in_sample, Rng* rng) {
    Tree tree;
    const std::size_t n = d_.n;
    row_slot_.assign(n, -1);
    Stats root;
    for (std::uint32_t r = 0; r < n; ++r) {
      if (!in_sample[r]) continue;
      root.a += a_[r];
      root.b += b_[r];
      ++root.count;
    }
    tree.nodes.emplace_back();
    if (!splittable(root, 0)) {
      tree.nodes[0].value = leaf_value(root);
      return tree;
    }
    for (std::uint32_t r = 0; r < n; ++r) {
      if (in_sample[r]) row_slot_[r] = 0;
    }
    active_.resize(d_.f);
    for (std::size_t j = 0; j < d_.f; ++j) {
      active_[j].clear();
      for (auto r : d_.sorted[j]) {
        if (in_sample[r]) active_[j].push_back(r);
      }
    }
    std::vector<Slot> slots{make_slot(0, root, 0)};

    while (!slots.empty()) {
      const std::size_t ns = slots.size();
      // Feature subsets per node.
      mask_.assign(ns * d_.f, cfg_.mtry == 0 || cfg_.mtry >= d_.f ? 1 : 0);
      std::vector<char> any(d_.f, mask_.empty() ? 0 : mask_[0]);
      if (cfg_.mtry != 0 && cfg_.mtry < d_.f) {
        std::vector<std::uint32_t> feats(d_.f);
        for (std::size_t s = 0; s < ns; ++s) {
          std::iota(feats.begin(), feats.end(), 0u);
          for (std::size_t i = 0; i < cfg_.mtry; ++i) {
            std::swap(feats[i], feats[i + rng->below(d_.f - i)]);
            mask_[s * d_.f + feats[i]] = 1;
            any[feats[i]] = 1;
          }
        }
      }
      for (auto& s : slots) {
        s.parent_score = score(s.total.a, s.total.b);
        s.best_gain = 0.0;
        s.best_feature = -1;
      }
      scan(slots, any);

      // Materialise splits and the next level.
      std::vector<Slot> next;
      std::vector<std::int32_t> go_left(ns, -1), go_right(ns, -1);
      for (std::size_t s = 0; s < ns; ++s) {
        Slot& sl = slots[s];
        TreeNode& node = tree.nodes[sl.node];
        if (sl.best_feature < 0) {
          node.value = leaf_value(sl.total);
          continue;
        }
        importance_[static_cast<std::size_t>(sl.best_feature)] += sl.best_gain;
        const auto left_id = static_cast<std::uint32_t>(tree.nodes.size());
        const Stats l = sl.best_left;
        const Stats r{sl.total.a - l.a, sl.total.b - l.b, sl.total.count - l.count};
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& parent = tree.nodes[sl.node];
        parent.feature = sl.best_feature;
        parent.threshold = sl.best_threshold;
        parent.left = left_id;
        parent.right = left_id + 1;
        const std::uint32_t depth = sl.depth + 1;
        if (splittable(l, depth)) {
          go_left[s] = static_cast<std::int32_t>(next.size());
          next.push_back(make_slot(left_id, l, depth));
        } else {
          tree.nodes[left_id].value = leaf_value(l);
        }
        if (splittable(r, depth)) {
          go_right[s] = static_cast<std::int32_t>(next.size());
          next.push_back(make_slot(left_id + 1, r, depth));
        } else {
          tree.nodes[left_id + 1].value = leaf_value(r);
        }
      }

      // Route rows, then drop finished rows from the presorted lists.
      for (auto r : active_[0]) {
        const auto s = static_cast<std::size_t>(row_slot_[r]);
        const Slot& sl = slots[s];
        if (sl.best_feature < 0) {
          row_slot_[r] = -1;
          continue;
        }
        const bool left = d_.v(static_cast<std::size_t>(sl.best_feature), r) <= sl.best_threshold;
        row_slot_[r] = left ? go_left[s] : go_right[s];
      }
      for (auto& list : active_) {
        std::size_t w = 0;
        for (auto r : list) {
          if (row_slot_[r] >= 0) list[w++] = r;
        }
        list.resize(w);
      }
      slots = std::move(next);
    }
    return tree;
  }

 private:
  struct Slot {
    std::uint32_t node = 0;
    Stats total;
    std::uint32_t depth = 0;
    double parent_score = 0.0;
    double best_gain = 0.0;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    Stats best_left;
  };

  static Slot make_slot(std::uint32_t node, const Stats& total, std::uint32_t depth) {
    Slot s;
    s.node = node;
    s.total = total;
    s.depth = depth;
    return s;
  }

  double score(double a, double b) const {
    if (cfg_.criterion == Criterion::kGini) {
      const double w = a + b;
      return w > 0.0 ? (a * a + b * b) / w : 0.0;
    }
    return a * a / (b + cfg_.l2);
  }

  double leaf_value(const Stats& s) const {
    if (cfg_.criterion == Criterion::kGini) {
      const double w = s.a + s.b;
      return w > 0.0 ? s.b / w : 0.0;
    }
    const double denom = s.b + cfg_.l2;
    return denom > 0.0 ? -s.a / denom * cfg_.learning_rate : 0.0;
  }

  bool splittable(const Stats& s, std::uint32_t depth) const {
    if (depth >= cfg_.max_depth || s.count < std::max<std::uint32_t>(2, cfg_.min_samples_split)) return false;
    if (cfg_.criterion == Criterion::kGini) return s.a > 0.0 && s.b > 0.0;
    return s.b >= 2.0 * cfg_.min_child_weight;
  }

  void scan(std::vector<Slot>& slots, const std::vector<char>& any) {
    const std::size_t ns = slots.size();
    std::vector<Stats> left(ns);
    std::vector<double> last(ns);
    constexpr double kMinGain = 1e-12;
    for (std::size_t j = 0; j < d_.f; ++j) {
      if (!any[j]) continue;
      std::fill(left.begin(), left.end(), Stats{});
      const double* c = d_.col.data() + j * d_.n;
      for (auto r : active_[j]) {
        const auto s = static_cast<std::size_t>(row_slot_[r]);
        if (!mask_[s * d_.f + j]) continue;
        const double x = c[r];
        Stats& l = left[s];
        if (l.count > 0 && x > last[s]) {
          Slot& sl = slots[s];
          const double ra = sl.total.a - l.a;
          const double rb = sl.total.b - l.b;
          const bool ok = cfg_.criterion == Criterion::kGini ||
                          (l.b >= cfg_.min_child_weight && rb >= cfg_.min_child_weight);
          if (ok) {
            const double gain = score(l.a, l.b) + score(ra, rb) - sl.parent_score;
            if (gain > sl.best_gain + kMinGain) {
              double thr = last[s] + (x - last[s]) * 0.5;
              if (!(thr < x)) thr = last[s];
              sl.best_gain = gain;
              sl.best_feature = static_cast<std::int32_t>(j);
              sl.best_threshold = thr;
              sl.best_left = l;
            }
          }
        }
        l.a += a_[r];
        l.b += b_[r];
        ++l.count;
        last[s] = x;
      }
    }
  }

  const Dataset& d_;
  std::span<const double> a_;
  std::span<const double> b_;
  const BuildConfig& cfg_;
  std::vector<double>& importance_;
  std::vector<std::int32_t> row_slot_;
  std::vector<std::vector<std::uint32_t>> active_;
  std::vector<char> mask_;
};

void check_labels(std::span<const std::size_t> rows, std::span<const int> y) {
  if (rows.size() != y.size()) fail(ErrorCode::kBadConfig, "label count differs from training rows");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else fail(ErrorCode::kBadConfig, "labels must be 0 or 1");
  }
  if (!has0 || !has1) fail(ErrorCode::kDegenerateLabels, "training labels contain a single class");
}

std::vector<double> normalise(std::vector<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total > 0.0) {
    for (double& x : v) x /= total;
  }
  return v;
}

std::vector<std::size_t> all_rows(const features::FeatureMatrix& x) {
  std::vector<std::size_t> rows(x.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TreeEnsembleModel fit_random_forest(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                                    std::span<const int> y, const RfParams& params, std::uint64_t seed,
                                    int workers) {
  check_labels(rows, y);
  if (params.n_estimators == 0 || params.max_depth == 0) fail(ErrorCode::kBadConfig, "random forest needs trees and depth");
  if (!(params.class_weight > 0.0)) fail(ErrorCode::kBadConfig, "class_weight must be positive");
  const Dataset d = make_dataset(x, rows);

  TreeEnsembleModel m;
  m.kind = EnsembleKind::kRandomForest;
  m.seed = seed;
  m.rf = params;
  m.class_weights = {1.0, params.class_weight};
  m.schema_version = x.schema_version;
  m.schema_digest = x.digest();
  m.n_features = static_cast<std::uint32_t>(d.f);
  m.trees.resize(params.n_estimators);

  BuildConfig cfg;
  cfg.criterion = Criterion::kGini;
  cfg.max_depth = params.max_depth;
  cfg.min_samples_split = params.min_samples_split;
  cfg.mtry = params.max_features ? params.max_features
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d.f))));

  std::vector<std::vector<double>> per_tree_imp(params.n_estimators);
  parallel_for(params.n_estimators, workers, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {0x52, t}));
    std::vector<std::uint32_t> counts(d.n, 0);
    for (std::size_t i = 0; i < d.n; ++i) ++counts[rng.below(d.n)];
    std::vector<double> a(d.n, 0.0), b(d.n, 0.0);
    std::vector<char> in(d.n, 0);
    for (std::size_t i = 0; i < d.n; ++i) {
      if (!counts[i]) continue;
      in[i] = 1;
      (y[i] == 1 ? b[i] : a[i]) = counts[i] * m.class_weights[static_cast<std::size_t>(y[i])];
    }
    per_tree_imp[t].assign(d.f, 0.0);
    LevelBuilder builder(d, a, b, cfg, per_tree_imp[t]);
    m.trees[t] = builder.build(in, &rng);
  });
  m.importances.assign(d.f, 0.0);
  for (const auto& imp : per_tree_imp) {
    const auto norm = normalise(imp);
    for (std::size_t j = 0; j < d.f; ++j) m.importances[j] += norm[j];
  }
  m.importances = normalise(std::move(m.importances));
  return m;
}

TreeEnsembleModel fit_random_forest(const features::FeatureMatrix& x, std::span<const int> y,
                                    const RfParams& params, std::uint64_t seed, int workers) {
  const auto rows = all_rows(x);
  return fit_random_forest(x, rows, y, params, seed, workers);
}

TreeEnsembleModel fit_gbdt(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                           std::span<const int> y, const GbdtParams& params, std::uint64_t seed) {
  check_labels(rows, y);
  if (!(params.learning_rate > 0.0)) fail(ErrorCode::kBadConfig, "learning_rate must be positive");
  if (params.max_depth == 0) fail(ErrorCode::kBadConfig, "max_depth must be positive");
  if (!(params.l2 >= 0.0) || !(params.min_child_weight >= 0.0)) fail(ErrorCode::kBadConfig, "l2 and min_child_weight must be non-negative");
  const Dataset d = make_dataset(x, rows);

  TreeEnsembleModel m;
  m.kind = EnsembleKind::kGradientBoosted;
  m.seed = seed;
  m.gbdt = params;
  m.schema_version = x.schema_version;
  m.schema_digest = x.digest();
  m.n_features = static_cast<std::uint32_t>(d.f);

  double pos = 0.0;
  for (int v : y) pos += v;
  const double prior = pos / static_cast<double>(y.size());
  m.base_score = std::log(prior / (1.0 - prior));

  BuildConfig cfg;
  cfg.criterion = Criterion::kNewton;
  cfg.max_depth = params.max_depth;
  cfg.min_samples_split = 2;
  cfg.min_child_weight = params.min_child_weight;
  cfg.l2 = params.l2;
  cfg.learning_rate = params.learning_rate;

  std::vector<double> raw(d.n, m.base_score), g(d.n), h(d.n);
  const std::vector<char> in(d.n, 1);
  std::vector<double> imp(d.f, 0.0);
  for (std::uint32_t round = 0; round < params.n_estimators; ++round) {
    for (std::size_t i = 0; i < d.n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-raw[i]));
      g[i] = p - y[i];
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    LevelBuilder builder(d, g, h, cfg, imp);
    Tree t = builder.build(in, nullptr);
    std::vector<double> xi(d.f);
    for (std::uint32_t i = 0; i < d.n; ++i) {
      for (std::size_t j = 0; j < d.f; ++j) xi[j] = d.v(j, i);
      raw[i] += t.leaf_value(xi);
    }
    m.trees.push_back(std::move(t));
  }
  m.importances = normalise(std::move(imp));
  return m;
}

TreeEnsembleModel fit_gbdt(const features::FeatureMatrix& x, std::span<const int> y,
                           const GbdtParams& params, std::uint64_t seed) {
  const auto rows = all_rows(x);
  return fit_gbdt(x, rows, y, params, seed);
}

}  // namespace sleid::trees
