#include "sleid/selftrain/selftrain.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/trees/cv.hpp"
#include "sleid/trees/learners.hpp"

namespace sleid::selftrain {

namespace {

void check_params(const SelfTrainParams& p) {
  if (!(p.confidence > 0.5 && p.confidence < 1.0)) fail(ErrorCode::kBadConfig, "confidence must be in (0.5, 1)");
  if (p.max_iters < 1) fail(ErrorCode::kBadConfig, "max_iters must be at least 1");
}

// Scores the pool, moves confident rows into the training set and returns
// (licit, illicit) admission counts.
std::pair<std::size_t, std::size_t> admit(const features::FeatureMatrix& x, const trees::VotingModel& model,
                                          double confidence, std::vector<std::size_t>& pool,
                                          std::vector<std::size_t>& rows, std::vector<int>& y) {
  std::size_t licit = 0, illicit = 0;
  std::vector<std::size_t> rest;
  for (auto r : pool) {
    const auto p = model.predict_proba(x.row(r));
    if (std::max(p[0], p[1]) >= confidence) {
      const int label = trees::vote_label(p);
      rows.push_back(r);
      y.push_back(label);
      (label == 1 ? illicit : licit)++;
    } else {
      rest.push_back(r);
    }
  }
  pool = std::move(rest);
  return {licit, illicit};
}

}  // namespace

trees::VotingModel fit_voting(const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                              std::span<const int> y, const LearnerConfig& config, std::uint64_t seed,
                              int workers) {
  std::vector<trees::TreeEnsembleModel> members;
  members.push_back(trees::fit_random_forest(x, rows, y, config.rf, derive_seed(seed, {0xAF}), workers));
  members.push_back(trees::fit_gbdt(x, rows, y, config.gbdt, derive_seed(seed, {0xB0})));
  return trees::make_voting(std::move(members));
}

FoldRun self_train(const features::FeatureMatrix& x, std::span<const std::size_t> train_rows,
                   std::span<const int> train_y, std::span<const std::size_t> validation_rows,
                   std::span<const int> validation_y, std::span<const std::size_t> pool_rows,
                   const LearnerConfig& config, const SelfTrainParams& params, std::uint64_t seed,
                   bool keep_model) {
  check_params(params);
  if (train_rows.size() != train_y.size() || validation_rows.size() != validation_y.size()) {
    fail(ErrorCode::kBadConfig, "row and label counts differ");
  }
  FoldRun run;
  run.validation_rows.assign(validation_rows.begin(), validation_rows.end());
  run.validation_labels.assign(validation_y.begin(), validation_y.end());
  std::vector<std::size_t> rows(train_rows.begin(), train_rows.end());
  std::vector<int> y(train_y.begin(), train_y.end());
  std::vector<std::size_t> pool(pool_rows.begin(), pool_rows.end());

  double best_recall = -1.0;
  for (int it = 1; it <= params.max_iters; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.train_size = rows.size();
    rec.pool_before = pool.size();
    trees::VotingModel model = fit_voting(x, rows, y, config, derive_seed(seed, {static_cast<std::uint64_t>(it)}),
                                          params.workers);
    std::vector<double> p1(validation_rows.size());
    std::vector<int> pred(validation_rows.size());
    for (std::size_t i = 0; i < validation_rows.size(); ++i) {
      p1[i] = model.predict_p1(x.row(validation_rows[i]));
      pred[i] = trees::vote_label(p1[i]);
    }
    if (!validation_rows.empty()) {
      rec.validation = metrics::classification_report(validation_y, pred);
      bool has_pos = std::find(validation_y.begin(), validation_y.end(), 1) != validation_y.end();
      if (has_pos) rec.validation.pr_auc = metrics::pr_auc(validation_y, p1);
    }
    if (rec.validation.illicit.recall > best_recall) {
      best_recall = rec.validation.illicit.recall;
      run.retained_iteration = it;
      run.retained_p1 = p1;
      if (keep_model) run.retained_model = model;
    }
    const bool last = it == params.max_iters || pool.empty();
    if (!last) {
      const auto [licit, illicit] = admit(x, model, params.confidence, pool, rows, y);
      rec.admitted_licit = licit;
      rec.admitted_illicit = illicit;
    }
    run.iterations.push_back(rec);
    if (last || rec.admitted_licit + rec.admitted_illicit == 0) break;
  }
  return run;
}

FinalFit self_train_fixed(const features::FeatureMatrix& x, std::span<const std::size_t> train_rows,
                          std::span<const int> train_y, std::span<const std::size_t> pool_rows,
                          const LearnerConfig& config, const SelfTrainParams& params, int iterations,
                          std::uint64_t seed) {
  check_params(params);
  if (iterations < 1) fail(ErrorCode::kBadConfig, "iterations must be at least 1");
  std::vector<std::size_t> rows(train_rows.begin(), train_rows.end());
  std::vector<int> y(train_y.begin(), train_y.end());
  std::vector<std::size_t> pool(pool_rows.begin(), pool_rows.end());
  FinalFit out;
  for (int it = 1;; ++it) {
    out.model = fit_voting(x, rows, y, config, derive_seed(seed, {static_cast<std::uint64_t>(it)}), params.workers);
    if (it == iterations || pool.empty()) break;
    const auto [licit, illicit] = admit(x, out.model, params.confidence, pool, rows, y);
    if (licit + illicit == 0) break;
  }
  out.admitted_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(train_rows.size()), rows.end());
  out.admitted_labels.assign(y.begin() + static_cast<std::ptrdiff_t>(train_y.size()), y.end());
  return out;
}

TrainingRun cross_validate(const features::FeatureMatrix& x, std::span<const std::size_t> labeled_rows,
                           std::span<const int> labels, std::span<const std::size_t> extra_rows,
                           std::span<const int> extra_labels, std::span<const std::size_t> pool_rows,
                           const LearnerConfig& config, const SelfTrainParams& params, int k_folds,
                           std::uint64_t seed) {
  check_params(params);
  if (labeled_rows.size() != labels.size() || extra_rows.size() != extra_labels.size()) {
    fail(ErrorCode::kBadConfig, "row and label counts differ");
  }
  const auto folds = trees::stratified_kfold(labels, k_folds, seed);
  TrainingRun run;
  run.folds.resize(static_cast<std::size_t>(k_folds));
  SelfTrainParams inner = params;
  inner.workers = 1;
  parallel_for(run.folds.size(), params.workers, [&](std::size_t f) {
    std::vector<std::size_t> tr, va;
    std::vector<int> ty, vy;
    for (std::size_t i = 0; i < labeled_rows.size(); ++i) {
      if (folds[i] == static_cast<int>(f)) {
        va.push_back(labeled_rows[i]);
        vy.push_back(labels[i]);
      } else {
        tr.push_back(labeled_rows[i]);
        ty.push_back(labels[i]);
      }
    }
    tr.insert(tr.end(), extra_rows.begin(), extra_rows.end());
    ty.insert(ty.end(), extra_labels.begin(), extra_labels.end());
    run.folds[f] = self_train(x, tr, ty, va, vy, pool_rows, config, inner,
                              derive_seed(seed, {0xC5, static_cast<std::uint64_t>(f)}));
    run.folds[f].fold = static_cast<int>(f);
  });

  std::vector<int> truth, pred;
  std::vector<double> scores;
  std::map<int, int> votes;
  for (const auto& f : run.folds) {
    for (std::size_t i = 0; i < f.validation_rows.size(); ++i) {
      truth.push_back(f.validation_labels[i]);
      scores.push_back(f.retained_p1[i]);
      pred.push_back(trees::vote_label(f.retained_p1[i]));
    }
    ++votes[f.retained_iteration];
  }
  run.pooled = metrics::classification_report(truth, pred);
  run.pooled.pr_auc = metrics::pr_auc(truth, scores);
  int best = 0;
  for (const auto& [it, count] : votes) {
    if (count > best) {
      best = count;
      run.modal_retained_iteration = it;
    }
  }
  return run;
}

nlohmann::ordered_json TrainingRun::to_json() const {
  nlohmann::ordered_json j;
  j["pooled"] = metrics::to_json(pooled);
  j["modal_retained_iteration"] = modal_retained_iteration;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["retained_iteration"] = f.retained_iteration;
    auto its = nlohmann::ordered_json::array();
    for (const auto& it : f.iterations) {
      nlohmann::ordered_json ij;
      ij["iteration"] = it.iteration;
      ij["train_size"] = it.train_size;
      ij["pool_before"] = it.pool_before;
      ij["admitted_licit"] = it.admitted_licit;
      ij["admitted_illicit"] = it.admitted_illicit;
      ij["validation"] = metrics::to_json(it.validation);
      its.push_back(ij);
    }
    fj["iterations"] = its;
    arr.push_back(fj);
  }
  j["folds"] = arr;
  return j;
}

std::string TrainingRun::curve_csv() const {
  std::string out =
      "fold,iteration,train_size,pool_before,admitted_licit,admitted_illicit,precision,recall,f1,accuracy,retained\n";
  char buf[320];
  for (const auto& f : folds) {
    for (const auto& it : f.iterations) {
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%d\n", f.fold, it.iteration,
                    it.train_size, it.pool_before, it.admitted_licit, it.admitted_illicit,
                    it.validation.illicit.precision, it.validation.illicit.recall, it.validation.illicit.f1,
                    it.validation.accuracy, it.iteration == f.retained_iteration ? 1 : 0);
      out += buf;
    }
  }
  return out;
}

}  // namespace sleid::selftrain
