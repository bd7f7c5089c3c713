#include "sleid/trees/cv.hpp"

#include <cmath>
#include <cstdio>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/metrics/metrics.hpp"
#include "sleid/trees/learners.hpp"
#include "sleid/trees/voting.hpp"

namespace sleid::trees {

std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::kBadConfig, "k must be at least 2");
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorCode::kBadConfig, "labels must be 0 or 1");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<int> fold(labels.size(), 0);
  std::size_t offset = 0;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    if (idx.size() < static_cast<std::size_t>(k)) {
      fail(ErrorCode::kTooFewPerClass, "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                           " members, fewer than k=" + std::to_string(k));
    }
    Rng rng(derive_seed(seed, {0x5F, static_cast<std::uint64_t>(c)}));
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      fold[idx[i]] = static_cast<int>((i + offset) % static_cast<std::size_t>(k));
    }
    offset += idx.size();
  }
  return fold;
}

namespace {

std::int64_t draw(Rng& rng, const IntRange& r) { return r.lo == r.hi ? r.lo : rng.between(r.lo, r.hi); }

double draw(Rng& rng, const RealRange& r) {
  if (r.lo == r.hi) return r.lo;
  if (r.log_scale) return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
  return rng.uniform(r.lo, r.hi);
}

void check(const IntRange& r, const char* name, std::int64_t min) {
  if (r.lo > r.hi || r.lo < min) fail(ErrorCode::kBadConfig, std::string("bad search range for ") + name);
}

void check(const RealRange& r, const char* name, double min, bool strict) {
  const bool low_ok = strict ? r.lo > min : r.lo >= min;
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || !low_ok || (r.log_scale && r.lo <= 0.0)) {
    fail(ErrorCode::kBadConfig, std::string("bad search range for ") + name);
  }
}

}  // namespace

void SearchSpace::validate() const {
  check(rf_n_estimators, "rf_n_estimators", 1);
  check(rf_max_depth, "rf_max_depth", 1);
  check(rf_min_samples_split, "rf_min_samples_split", 2);
  check(rf_class_weight, "rf_class_weight", 0.0, true);
  check(gbdt_max_depth, "gbdt_max_depth", 1);
  check(gbdt_learning_rate, "gbdt_learning_rate", 0.0, true);
  check(gbdt_n_estimators, "gbdt_n_estimators", 0);
  check(gbdt_l2, "gbdt_l2", 0.0, false);
}

RfParams SearchSpace::sample_rf(Rng& rng, const RfParams& base) const {
  RfParams p = base;
  p.n_estimators = static_cast<std::uint32_t>(draw(rng, rf_n_estimators));
  p.max_depth = static_cast<std::uint32_t>(draw(rng, rf_max_depth));
  p.min_samples_split = static_cast<std::uint32_t>(draw(rng, rf_min_samples_split));
  p.class_weight = draw(rng, rf_class_weight);
  return p;
}

GbdtParams SearchSpace::sample_gbdt(Rng& rng, const GbdtParams& base) const {
  GbdtParams p = base;
  p.max_depth = static_cast<std::uint32_t>(draw(rng, gbdt_max_depth));
  p.learning_rate = draw(rng, gbdt_learning_rate);
  p.n_estimators = static_cast<std::uint32_t>(draw(rng, gbdt_n_estimators));
  p.l2 = draw(rng, gbdt_l2);
  return p;
}

std::string TuneResult::trial_log_csv() const {
  std::string out = "trial,learner,n_estimators,max_depth,min_samples_split,class_weight,learning_rate,l2,mean_f1\n";
  char buf[256];
  for (const auto& t : trials) {
    if (t.learner == EnsembleKind::kRandomForest) {
      std::snprintf(buf, sizeof buf, "%zu,random_forest,%u,%u,%u,%.17g,,,%.17g\n", t.trial, t.rf.n_estimators,
                    t.rf.max_depth, t.rf.min_samples_split, t.rf.class_weight, t.mean_f1);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,gradient_boosted,%u,%u,,,%.17g,%.17g,%.17g\n", t.trial,
                    t.gbdt.n_estimators, t.gbdt.max_depth, t.gbdt.learning_rate, t.gbdt.l2, t.mean_f1);
    }
    out += buf;
  }
  return out;
}

TuneResult tune(const features::FeatureMatrix& x, std::span<const std::size_t> rows, std::span<const int> y,
                std::span<const std::size_t> extra_rows, std::span<const int> extra_y,
                const SearchSpace& space, const TuneOptions& options) {
  if (options.budget == 0) fail(ErrorCode::kBadConfig, "tuner budget must be at least 1");
  if (rows.size() != y.size() || extra_rows.size() != extra_y.size()) {
    fail(ErrorCode::kBadConfig, "row and label counts differ");
  }
  space.validate();
  const int k = options.k_folds;
  const auto folds = stratified_kfold(y, k, options.seed);

  TuneResult result;
  for (std::size_t t = 0; t < options.budget; ++t) {
    Rng rng(derive_seed(options.seed, {0x7A, t}));
    TrialRecord rf;
    rf.trial = t;
    rf.learner = EnsembleKind::kRandomForest;
    rf.rf = space.sample_rf(rng, options.rf_base);
    TrialRecord gb;
    gb.trial = t;
    gb.learner = EnsembleKind::kGradientBoosted;
    gb.gbdt = space.sample_gbdt(rng, options.gbdt_base);
    result.trials.push_back(rf);
    result.trials.push_back(gb);
  }

  // One job per (trial record, fold).
  const std::size_t jobs = result.trials.size() * static_cast<std::size_t>(k);
  std::vector<double> f1(jobs, 0.0);
  parallel_for(jobs, options.workers, [&](std::size_t job) {
    const std::size_t rec = job / static_cast<std::size_t>(k);
    const int fold = static_cast<int>(job % static_cast<std::size_t>(k));
    const TrialRecord& tr = result.trials[rec];
    std::vector<std::size_t> train_rows;
    std::vector<int> train_y;
    std::vector<std::size_t> val_rows;
    std::vector<int> val_y;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (folds[i] == fold) {
        val_rows.push_back(rows[i]);
        val_y.push_back(y[i]);
      } else {
        train_rows.push_back(rows[i]);
        train_y.push_back(y[i]);
      }
    }
    train_rows.insert(train_rows.end(), extra_rows.begin(), extra_rows.end());
    train_y.insert(train_y.end(), extra_y.begin(), extra_y.end());
    const std::uint64_t seed = derive_seed(options.seed, {0x7B, tr.trial, static_cast<std::uint64_t>(fold)});
    const TreeEnsembleModel m = tr.learner == EnsembleKind::kRandomForest
                                    ? fit_random_forest(x, train_rows, train_y, tr.rf, seed, 1)
                                    : fit_gbdt(x, train_rows, train_y, tr.gbdt, seed);
    std::vector<int> pred(val_rows.size());
    for (std::size_t i = 0; i < val_rows.size(); ++i) pred[i] = vote_label(m.predict_p1(x.row(val_rows[i])));
    f1[job] = metrics::classification_report(val_y, pred).illicit.f1;
  });

  double best_rf = -1.0, best_gb = -1.0;
  for (std::size_t rec = 0; rec < result.trials.size(); ++rec) {
    auto& tr = result.trials[rec];
    tr.fold_f1.assign(f1.begin() + static_cast<std::ptrdiff_t>(rec * k),
                      f1.begin() + static_cast<std::ptrdiff_t>((rec + 1) * k));
    double sum = 0.0;
    for (double v : tr.fold_f1) sum += v;
    tr.mean_f1 = sum / static_cast<double>(k);
    if (tr.learner == EnsembleKind::kRandomForest && tr.mean_f1 > best_rf) {
      best_rf = tr.mean_f1;
      result.best_rf = tr.rf;
      result.best_rf_trial = tr.trial;
    }
    if (tr.learner == EnsembleKind::kGradientBoosted && tr.mean_f1 > best_gb) {
      best_gb = tr.mean_f1;
      result.best_gbdt = tr.gbdt;
      result.best_gbdt_trial = tr.trial;
    }
  }
  return result;
}

}  // namespace sleid::trees
