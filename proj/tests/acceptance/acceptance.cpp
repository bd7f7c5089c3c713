// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code is
// the number of failures not listed with --expect-fail.

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "../support.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/expand/expand.hpp"
#include "sleid/features/matrix.hpp"
#include "sleid/isoforest/isoforest.hpp"
#include "sleid/metrics/metrics.hpp"
#include "sleid/pipeline/pipeline.hpp"
#include "sleid/synthgen/synthgen.hpp"
#include "sleid/trees/cv.hpp"
#include "sleid/trees/voting.hpp"

using namespace sleid;
namespace t = sleid::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- benchmark

struct BenchRun {
  std::uint64_t seed = 0;
  double seconds = 0;
  std::array<double, 3> f1{};  // sleid, supervised_only, if_supervised
  std::vector<selftrain::TrainingRun> runs;
  std::vector<int> final_iterations;
};

std::vector<BenchRun>& bench_runs() {
  static std::vector<BenchRun> runs;
  return runs;
}

BenchRun run_benchmark(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  synthgen::ScenarioConfig sc;
  sc.seed = seed;
  sc.n_accounts = 20000;
  sc.illicit_fraction = 0.01;
  sc.stealth = 1.0;
  sc.reveal_illicit = 0.25;
  sc.reveal_bias = 4.0;
  auto s = synthgen::generate(sc);
  auto g = txgraph::ingest(s.records, {}, &s.observed);

  pipeline::PipelineConfig pc;
  pc.seed = seed;
  pc.workers = 1;
  pc.ablation = true;
  pc.tuner_budget = 2;
  pc.space.rf_n_estimators = {50, 150};
  pc.space.gbdt_n_estimators = {50, 150};
  pipeline::PipelineInputs in;
  in.graph = &g;
  in.seeds = s.seeds();
  in.registry = &s.registry;
  in.labels = &s.observed;
  auto r = pipeline::run_pipeline(in, pc);

  BenchRun b;
  b.seed = seed;
  b.seconds = seconds_since(t0);
  for (const auto& m : r.modes) {
    const std::size_t slot = m.mode == pipeline::TrainingMode::kSleid            ? 0
                             : m.mode == pipeline::TrainingMode::kSupervisedOnly ? 1
                                                                                 : 2;
    b.f1[slot] = m.run.pooled.illicit.f1;
    b.runs.push_back(m.run);
    b.final_iterations.push_back(m.final_iterations);
  }
  std::printf("  benchmark seed %llu: sleid %.4f  supervised_only %.4f  if_supervised %.4f  (%.1fs)\n",
              static_cast<unsigned long long>(seed), b.f1[0], b.f1[1], b.f1[2], b.seconds);
  std::fflush(stdout);
  return b;
}

Outcome criterion1(int n_seeds) {
  auto& runs = bench_runs();
  runs.clear();
  for (int s = 1; s <= n_seeds; ++s) runs.push_back(run_benchmark(static_cast<std::uint64_t>(s)));
  std::array<double, 3> mean{};
  double worst = 0;
  for (const auto& b : runs) {
    for (int i = 0; i < 3; ++i) mean[i] += b.f1[i] / static_cast<double>(runs.size());
    worst = std::max(worst, b.seconds);
  }
  const double over_sup = mean[0] - mean[1], over_if = mean[0] - mean[2];
  Outcome o;
  o.pass = mean[0] >= 0.90 && over_sup >= 0.02 && over_if >= 0.005 && worst <= 600.0;
  o.detail = fmt("mean F1 sleid %.4f (need >= 0.90), +%.4f over supervised_only (need >= 0.02), "
                 "+%.4f over if_supervised (need >= 0.005), slowest run %.1fs (need <= 600)",
                 mean[0], over_sup, over_if, worst);
  return o;
}

// ------------------------------------------------------------------ metrics

Outcome criterion2() {
  Rng rng(0xACCE);
  std::size_t checked = 0, mismatches = 0, ap_checked = 0;
  double worst = 0;
  auto cmp = [&](double a, double b) {
    const double d = std::fabs(a - b);
    worst = std::max(worst, d);
    if (!(d <= 1e-12)) ++mismatches;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const double prevalence = rng.uniform(0.0, 0.6);
    const double skill = rng.uniform();
    std::vector<int> y(n), p(n);
    std::vector<double> s(n);
    const double grid = static_cast<double>(2 + rng.below(40));
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(prevalence);
      p[i] = rng.bernoulli(skill) ? y[i] : rng.bernoulli(0.5);
      s[i] = std::round((rng.uniform() + skill * y[i]) * grid) / grid;
    }
    auto r = metrics::classification_report(y, p);
    auto o = t::oracle_metrics(y, p);
    cmp(r.illicit.precision, o.precision1);
    cmp(r.illicit.recall, o.recall1);
    cmp(r.illicit.f1, o.f1_1);
    cmp(r.licit.precision, o.precision0);
    cmp(r.licit.recall, o.recall0);
    cmp(r.licit.f1, o.f1_0);
    cmp(r.accuracy, o.accuracy);
    cmp(r.weighted_f1, o.weighted_f1);
    cmp(r.mcc, o.mcc);
    if (std::count(y.begin(), y.end(), 1) > 0) {
      cmp(metrics::pr_auc(y, s), t::oracle_average_precision(y, s));
      ++ap_checked;
    } else {
      try {
        metrics::pr_auc(y, s);
        ++mismatches;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefined) ++mismatches;
      }
    }
    ++checked;
  }
  return {mismatches == 0, fmt("%zu sets (%zu with PR-AUC), %zu mismatches, max |diff| %.3g (tol 1e-12)", checked,
                               ap_checked, mismatches, worst)};
}

// --------------------------------------------------------- isolation forest

Outcome criterion3() {
  std::size_t recovered = 0, planted = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(derive_seed(seed, {0x3}));
    const std::size_t n = 1000, outliers = 10;
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n - outliers) {
        d.push_back(rng.normal());
        d.push_back(rng.normal());
      } else {
        const double angle = rng.uniform(0, 2 * M_PI), radius = rng.uniform(6.0, 10.0);
        d.push_back(radius * std::cos(angle));
        d.push_back(radius * std::sin(angle));
      }
    }
    auto x = t::matrix(n, 2, d);
    isoforest::IsoParams p;
    p.seed = seed;
    auto part = isoforest::partition_unknowns(isoforest::fit(x, p), x, 0.01, 1);
    const std::set<std::string> flagged(part.pseudo_illicit.begin(), part.pseudo_illicit.end());
    for (std::size_t i = n - outliers; i < n; ++i) recovered += flagged.count(x.rows[i]);
    planted += outliers;
  }
  std::size_t bad_counts = 0;
  for (std::uint64_t n = 1; n <= 10000; ++n) {
    bad_counts += isoforest::contamination_count(n, 0.01) != (n + 99) / 100;
    bad_counts += isoforest::contamination_count(n, 0.005) != (5 * n + 999) / 1000;
    bad_counts += isoforest::contamination_count(n, 0.0025) != (25 * n + 9999) / 10000;
  }
  return {recovered == planted && bad_counts == 0,
          fmt("recovered %zu/%zu planted outliers over 20 seeds; %zu count mismatches for pools 1..10000", recovered,
              planted, bad_counts)};
}

// ------------------------------------------------------------ self-training

Outcome criterion4() {
  const auto& runs = bench_runs();
  if (runs.empty()) return {false, "needs the benchmark runs of criterion 1"};
  std::size_t folds = 0, violations = 0, max_iters = 0;
  for (const auto& b : runs) {
    for (std::size_t m = 0; m < b.runs.size(); ++m) {
      if (b.final_iterations[m] > 5) ++violations;
      for (const auto& f : b.runs[m].folds) {
        ++folds;
        max_iters = std::max(max_iters, f.iterations.size());
        if (f.iterations.empty() || f.iterations.size() > 5) ++violations;
        double retained = -1;
        for (const auto& it : f.iterations) {
          if (it.iteration == f.retained_iteration) retained = it.validation.illicit.recall;
        }
        for (const auto& it : f.iterations) {
          if (retained < it.validation.illicit.recall) ++violations;
        }
        for (std::size_t i = 1; i < f.iterations.size(); ++i) {
          if (f.iterations[i].pool_before >= f.iterations[i - 1].pool_before) ++violations;
        }
      }
    }
  }
  return {violations == 0, fmt("%zu folds checked, at most %zu iterations, %zu violations", folds, max_iters,
                               violations)};
}

// ---------------------------------------------------------------- expansion

Outcome criterion5() {
  const riskrate::DefiRegistry registry({t::addr(0xD1)});
  std::size_t graphs = 0, mismatches = 0, converged = 0, ratio_violations = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    Rng rng(derive_seed(seed, {0x5}));
    auto recs = t::seed_with_leaves(40 + rng.below(100));
    const int extra = static_cast<int>(rng.below(600));
    for (int i = 0; i < extra; ++i) {
      const std::uint64_t a = 1000 + rng.below(150), b = 100000 + rng.below(800);
      recs.push_back(t::tx(50000 + i, rng.bernoulli(0.5) ? a : b, rng.bernoulli(0.5) ? b : a,
                           1'600'000'000 + static_cast<std::int64_t>(rng.below(200 * 86400))));
    }
    std::vector<txgraph::TransactionRecord> ok;
    for (auto& r : recs) {
      if (r.sender != r.receiver) ok.push_back(r);
    }
    std::sort(ok.begin(), ok.end(), [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; });
    for (std::size_t i = 0; i < ok.size(); ++i) ok[i].block_height = 1 + i;
    auto g = txgraph::ingest(ok);
    std::set<std::string> admissible;
    for (const auto& acc : g.accounts()) {
      auto p = riskrate::risk_profile(g, acc.address, registry);
      if (p.is_normal || p.defi_involved) admissible.insert(acc.address);
    }
    expand::ExpandParams params;
    params.max_layers = 1 + static_cast<int>(rng.below(10));
    auto st = expand::expand_dataset(g, {t::addr(1)}, registry, params);
    auto expect = t::oracle_expand(g, {t::addr(1)}, admissible, params.ratio_threshold, params.max_layers);
    std::map<std::string, int> got;
    for (const auto& e : st.core) got[e.address] = e.layer;
    if (got != expect || st.layer_index > params.max_layers) ++mismatches;
    // Whether the frontier suffices is decided by the oracle with no layer cap.
    auto unbounded = t::oracle_expand(g, {t::addr(1)}, admissible, params.ratio_threshold, 1000);
    if (1.0 / static_cast<double>(unbounded.size()) <= params.ratio_threshold) {
      expand::ExpandParams uncapped = params;
      uncapped.max_layers = 1000;
      auto full = expand::expand_dataset(g, {t::addr(1)}, registry, uncapped);
      ++converged;
      if (!(full.illicit_ratio() <= 0.01) || full.status != expand::ExpansionStatus::kConverged) ++ratio_violations;
    }
    ++graphs;
  }
  auto exact = expand::expand_dataset(txgraph::ingest(t::seed_with_leaves(99)), {t::addr(1)}, registry);
  auto short_by_one = expand::expand_dataset(txgraph::ingest(t::seed_with_leaves(98)), {t::addr(1)}, registry);
  auto none = expand::expand_dataset(txgraph::ingest(std::vector{t::tx(1, 1, 2, 100), t::tx(2, 2, 3, 200)}),
                                     {t::addr(1)}, registry);
  const bool boundary = exact.status == expand::ExpansionStatus::kConverged && exact.core.size() == 100 &&
                        exact.illicit_ratio() == 0.01 &&
                        short_by_one.status == expand::ExpansionStatus::kExhaustedFrontier &&
                        short_by_one.core.size() == 99 && none.illicit_ratio() == 1.0 &&
                        none.status == expand::ExpansionStatus::kExhaustedFrontier;
  return {mismatches == 0 && ratio_violations == 0 && boundary,
          fmt("%zu graphs, %zu oracle mismatches, %zu/%zu sufficient frontiers above 0.01; 1 seed + 99 leaves "
              "ratio %.4f (%s), 98 leaves ratio %.4f (%s)",
              graphs, mismatches, ratio_violations, converged, exact.illicit_ratio(),
              std::string(expand::status_name(exact.status)).c_str(), short_by_one.illicit_ratio(),
              std::string(expand::status_name(short_by_one.status)).c_str())};
}

// ------------------------------------------------------------ preprocessing

Outcome criterion6() {
  Rng rng(0x66);
  std::size_t not_idempotent = 0, oracle_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.below(150), cols = 1 + rng.below(8);
    std::vector<double> d(rows * cols);
    for (auto& x : d) {
      const double u = rng.uniform();
      x = u < 0.1 ? sleid::kMissing
          : u < 0.12 ? INFINITY
                     : std::round(rng.normal(0, 20)) * (rng.bernoulli(0.03) ? 1000 : 1);
    }
    auto m = t::matrix(rows, cols, d);
    for (std::size_t i = 0; i < d.size(); ++i) m.missing[i] = std::isfinite(d[i]) ? 0 : 1;
    auto once = features::preprocess(m);
    auto twice = features::preprocess(once);
    if (once.data != twice.data || once.columns != twice.columns) ++not_idempotent;
    auto expect = t::oracle_preprocess(m);
    if (once.data != expect.data || once.columns != expect.columns) ++oracle_mismatch;
  }
  auto small = t::matrix(3, 1, {1.0, 2.0, sleid::kMissing});
  small.missing[2] = 1;
  auto p = features::preprocess(small);
  const bool example = p.data == std::vector<double>{1.0, 2.0, 1.5};
  return {not_idempotent == 0 && oracle_mismatch == 0 && example,
          fmt("100 matrices: %zu not idempotent, %zu differ from the hand oracle; [1, 2, missing] -> [%g, %g, %g]",
              not_idempotent, oracle_mismatch, p.data[0], p.data[1], p.data[2])};
}

// -------------------------------------------------------------- determinism

Outcome criterion7() {
  synthgen::ScenarioConfig sc;
  sc.seed = 77;
  sc.n_accounts = 4000;
  sc.illicit_fraction = 0.02;
  auto s = synthgen::generate(sc);
  auto g = txgraph::ingest(s.records, {}, &s.observed);
  std::vector<std::string> fingerprints;
  for (int w : {1, 2, 8}) {
    pipeline::PipelineConfig pc;
    pc.seed = 13;
    pc.workers = w;
    pc.ablation = true;
    pc.tuner_budget = 3;
    pc.space.rf_n_estimators = {20, 60};
    pc.space.gbdt_n_estimators = {20, 60};
    pipeline::PipelineInputs in;
    in.graph = &g;
    in.seeds = s.seeds();
    in.registry = &s.registry;
    in.labels = &s.observed;
    auto r = pipeline::run_pipeline(in, pc);
    std::string fp = r.report.dump() + r.predictions_csv() + isoforest::serialize_model(r.pseudo.model) +
                     features::serialize_matrix(r.features.x) + features::serialize_preprocessor(r.features.preprocessor);
    for (const auto& m : r.modes) fp += trees::serialize_voting(m.final_fit.model);
    fingerprints.push_back(std::move(fp));
  }
  const bool same = fingerprints[0] == fingerprints[1] && fingerprints[0] == fingerprints[2];
  return {same, fmt("reports, predictions and serialized models at workers 1/2/8: %s (%zu bytes compared)",
                    same ? "bit-identical" : "DIFFER", fingerprints[0].size())};
}

// ----------------------------------------------------------- stratification

Outcome criterion8() {
  Rng rng(0x88);
  std::size_t vectors = 0, splits = 0, violations = 0;
  double worst = 0;
  while (vectors < 500) {
    const std::size_t n = 20 + rng.below(481);
    const double prevalence = rng.uniform(0.02, 0.5);
    std::vector<int> y(n);
    for (auto& v : y) v = rng.bernoulli(prevalence);
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (pos < 10 || n - pos < 10) continue;
    ++vectors;
    for (int k : {2, 5, 10}) {
      auto folds = trees::stratified_kfold(y, k, rng.next());
      std::vector<std::array<double, 2>> count(static_cast<std::size_t>(k), {0, 0});
      for (std::size_t i = 0; i < n; ++i) count[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(y[i])] += 1;
      for (const auto& c : count) {
        const double size = c[0] + c[1];
        for (int cls = 0; cls < 2; ++cls) {
          const double global = cls ? static_cast<double>(pos) : static_cast<double>(n - pos);
          const double dev = std::max(std::fabs(c[static_cast<std::size_t>(cls)] - size * global / n),
                                      std::fabs(c[static_cast<std::size_t>(cls)] - global / k));
          worst = std::max(worst, dev);
          if (dev > 1.0) ++violations;
        }
      }
      ++splits;
    }
  }
  return {violations == 0, fmt("%zu label vectors, %zu splits (k = 2, 5, 10), max deviation %.3f samples (tol 1)",
                               vectors, splits, worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only, expect_fail;
  int seeds = 5;
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--expect-fail", expect_fail, "criteria whose failure does not count toward the exit code");
  app.add_option("--bench-seeds", seeds, "benchmark seeds for criterion 1")->check(CLI::Range(1, 50));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"synthetic benchmark ordering", [&] { return criterion1(seeds); }},
      {"metric oracle equivalence", criterion2},
      {"isolation forest recovery", criterion3},
      {"self-training contract", criterion4},
      {"expansion contract", criterion5},
      {"preprocessing contract", criterion6},
      {"determinism across worker counts", criterion7},
      {"stratification", criterion8},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> tolerated(expect_fail.begin(), expect_fail.end());
  // Criterion 4 inspects the benchmark runs.
  const bool need_bench = selected.empty() || selected.count(1) || selected.count(4);
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id) && !(id == 1 && need_bench)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!selected.empty() && !selected.count(id)) continue;
    std::printf("%s criterion %d (%s): %s [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), seconds_since(t0), !o.pass && tolerated.count(id) ? " (expected)" : "");
    std::fflush(stdout);
    if (!o.pass && !tolerated.count(id)) ++unexpected;
  }
  return unexpected;
}
