#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/trees/cv.hpp"
#include "sleid/trees/learners.hpp"
#include "sleid/trees/voting.hpp"

using namespace sleid;
using namespace sleid::trees;
using sleid::testing::matrix;

namespace {

struct Data {
  features::FeatureMatrix x;
  std::vector<int> y;
};

Data xor_data(std::size_t copies, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> d;
  std::vector<int> y;
  for (std::size_t i = 0; i < copies; ++i) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        d.push_back(a + noise * rng.normal());
        d.push_back(b + noise * rng.normal());
        y.push_back(a ^ b);
      }
    }
  }
  return {matrix(y.size(), 2, d), y};
}

// Two overlapping Gaussian blobs with a 10% minority.
Data blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> d;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = rng.bernoulli(0.1) ? 1 : 0;
    for (int c = 0; c < 4; ++c) d.push_back(rng.normal() + (label ? 1.0 : 0.0) * (c < 2 ? 1.2 : 0.0));
    y.push_back(label);
  }
  return {matrix(n, 4, d), y};
}

double accuracy(const TreeEnsembleModel& m, const Data& data) {
  auto p = m.predict_p1(data.x, 1);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += vote_label(p[i]) == data.y[i];
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

double recall(const TreeEnsembleModel& m, const Data& data) {
  auto p = m.predict_p1(data.x, 1);
  double tp = 0, pos = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (data.y[i]) {
      ++pos;
      tp += vote_label(p[i]);
    }
  }
  return tp / pos;
}

double log_loss(const TreeEnsembleModel& m, const Data& data) {
  double s = 0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const double p = m.predict_p1(data.x.row(i));
    s -= data.y[i] ? std::log(p) : std::log(1 - p);
  }
  return s / static_cast<double>(data.y.size());
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kUndefined;
}

}  // namespace

TEST_SUITE("trees") {
  TEST_CASE("two separable points") {
    Data d{matrix(2, 1, {0.0, 1.0}), {0, 1}};
    CHECK(accuracy(fit_random_forest(d.x, d.y, {}, 1, 1), d) == 1.0);
    GbdtParams g;
    g.min_child_weight = 0.0;
    CHECK(accuracy(fit_gbdt(d.x, d.y, g, 1), d) == 1.0);
  }

  TEST_CASE("depth one cannot solve xor") {
    auto d = xor_data(25, 0.0, 1);
    RfParams rf;
    rf.max_depth = 1;
    rf.max_features = 2;
    CHECK(accuracy(fit_random_forest(d.x, d.y, rf, 3, 1), d) <= 0.75);
    GbdtParams gb;
    gb.max_depth = 1;
    CHECK(accuracy(fit_gbdt(d.x, d.y, gb, 3), d) <= 0.75);
  }

  TEST_CASE("same seed gives identical predictions and models") {
    auto d = blobs(400, 2);
    RfParams rf;
    rf.n_estimators = 30;
    auto a = fit_random_forest(d.x, d.y, rf, 11, 1);
    auto b = fit_random_forest(d.x, d.y, rf, 11, 4);
    CHECK(a == b);
    CHECK(a.predict_p1(d.x, 1) == b.predict_p1(d.x, 3));
    GbdtParams gb;
    gb.n_estimators = 20;
    CHECK(fit_gbdt(d.x, d.y, gb, 5) == fit_gbdt(d.x, d.y, gb, 5));
  }

  TEST_CASE("probabilities sum to one") {
    auto d = blobs(300, 3);
    RfParams rf;
    rf.n_estimators = 20;
    GbdtParams gb;
    gb.n_estimators = 20;
    auto v = make_voting({fit_random_forest(d.x, d.y, rf, 1, 1), fit_gbdt(d.x, d.y, gb, 1)});
    for (std::size_t i = 0; i < d.x.n_rows(); ++i) {
      for (const auto& m : v.members) {
        auto p = m.predict_proba(d.x.row(i));
        CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
      }
      auto p = v.predict_proba(d.x.row(i));
      CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("gbdt base score and descent") {
    auto d = blobs(200, 4);
    GbdtParams zero;
    zero.n_estimators = 0;
    auto m = fit_gbdt(d.x, d.y, zero, 1);
    const double prior = static_cast<double>(std::accumulate(d.y.begin(), d.y.end(), 0)) / 200.0;
    for (std::size_t i = 0; i < 200; ++i) CHECK(m.predict_p1(d.x.row(i)) == doctest::Approx(prior).epsilon(1e-12));

    Data sep{matrix(4, 1, {0.0, 1.0, 2.0, 3.0}), {0, 0, 1, 1}};
    auto before = fit_gbdt(sep.x, sep.y, zero, 1);
    CHECK(before.predict_p1(sep.x.row(0)) == doctest::Approx(0.5));
    GbdtParams one;
    one.n_estimators = 1;
    one.max_depth = 6;
    one.min_child_weight = 0;
    CHECK(log_loss(fit_gbdt(sep.x, sep.y, one, 1), sep) < log_loss(before, sep));

    GbdtParams bad;
    bad.learning_rate = 0;
    CHECK(code_of([&] { fit_gbdt(d.x, d.y, bad, 1); }) == ErrorCode::kBadConfig);
    std::vector<int> ones(200, 1);
    CHECK(code_of([&] { fit_random_forest(d.x, ones, {}, 1, 1); }) == ErrorCode::kDegenerateLabels);
  }

  TEST_CASE("minority class weight does not lower training recall") {
    double r1 = 0, r2 = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto d = blobs(600, 100 + seed);
      RfParams p;
      p.n_estimators = 40;
      p.max_depth = 4;
      r1 += recall(fit_random_forest(d.x, d.y, p, seed, 1), d);
      p.class_weight = 2.0;
      r2 += recall(fit_random_forest(d.x, d.y, p, seed, 1), d);
    }
    CHECK(r2 >= r1);
  }

  TEST_CASE("soft voting") {
    std::array<double, 2> a{0.6, 0.4}, b{0.2, 0.8};
    auto v = soft_vote(std::vector{a, b});
    CHECK(v[0] == doctest::Approx(0.4));
    CHECK(v[1] == doctest::Approx(0.6));
    CHECK(vote_label(v) == 1);
    CHECK(soft_vote(std::vector{a, a}) == a);
    CHECK(vote_label(soft_vote(std::vector{std::array{0.5, 0.5}, std::array{0.5, 0.5}})) == 0);

    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      const double p = rng.uniform(), q = rng.uniform(), s = rng.uniform(0.01, 100);
      std::array<double, 2> m1{1 - p, p}, m2{1 - q, q};
      auto norm = [&](std::array<double, 2> x) {
        x[0] *= s;
        x[1] *= s;
        const double t = x[0] + x[1];
        return std::array<double, 2>{x[0] / t, x[1] / t};
      };
      const auto base = soft_vote(std::vector{m1, m2});
      const auto scaled = soft_vote(std::vector{norm(m1), norm(m2)});
      if (std::fabs(base[1] - base[0]) > 1e-9) CHECK(vote_label(base) == vote_label(scaled));
    }
  }

  TEST_CASE("voting container round trip") {
    auto d = blobs(200, 6);
    RfParams rf;
    rf.n_estimators = 5;
    GbdtParams gb;
    gb.n_estimators = 5;
    auto v = make_voting({fit_random_forest(d.x, d.y, rf, 1, 1), fit_gbdt(d.x, d.y, gb, 1)});
    const auto bytes = serialize_voting(v);
    CHECK(bytes.substr(0, kEnsembleMagic.size()) == kEnsembleMagic);
    CHECK(deserialize_voting(bytes) == v);
    CHECK(v.predict_p1(d.x, 1) == deserialize_voting(bytes).predict_p1(d.x, 2));
    auto other = d.x.select_columns(std::vector<std::string>{"c1", "c0", "c2", "c3"});
    CHECK(code_of([&] { v.predict_p1(other, 1); }) == ErrorCode::kSchemaError);
  }

  TEST_CASE("stratified folds") {
    auto count = [](const std::vector<int>& y, int k, std::uint64_t seed) {
      auto f = stratified_kfold(y, k, seed);
      std::vector<std::array<int, 2>> c(static_cast<std::size_t>(k), {0, 0});
      for (std::size_t i = 0; i < y.size(); ++i) c[static_cast<std::size_t>(f[i])][static_cast<std::size_t>(y[i])]++;
      return c;
    };
    std::vector<int> ten{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    for (auto [neg, pos] : count(ten, 5, 1)) {
      CHECK(pos == 1);
      CHECK(neg == 1);
    }
    std::vector<int> hundred(100, 0);
    std::fill(hundred.begin(), hundred.begin() + 10, 1);
    for (auto [neg, pos] : count(hundred, 5, 2)) CHECK(pos == 2);
    std::vector<int> odd(97, 0);
    std::fill(odd.begin(), odd.begin() + 13, 1);
    int sum = 0;
    for (auto [neg, pos] : count(odd, 5, 3)) {
      CHECK((pos == 2 || pos == 3));
      sum += pos;
    }
    CHECK(sum == 13);
    std::vector<int> few{1, 1, 0, 0, 0, 0, 0};
    CHECK(code_of([&] { stratified_kfold(few, 5, 1); }) == ErrorCode::kTooFewPerClass);
  }

  TEST_CASE("tuner") {
    auto d = xor_data(30, 0.05, 7);
    std::vector<std::size_t> rows(d.y.size());
    std::iota(rows.begin(), rows.end(), 0);
    SearchSpace point;
    point.rf_n_estimators = {10, 10};
    point.rf_max_depth = {3, 3};
    point.rf_min_samples_split = {2, 2};
    point.rf_class_weight = {1.5, 1.5};
    point.gbdt_max_depth = {2, 2};
    point.gbdt_learning_rate = {0.2, 0.2};
    point.gbdt_n_estimators = {10, 10};
    point.gbdt_l2 = {1, 1};
    TuneOptions opt;
    opt.budget = 4;
    opt.seed = 3;
    opt.workers = 1;
    auto r = tune(d.x, rows, d.y, {}, {}, point, opt);
    CHECK(r.best_rf.max_depth == 3);
    CHECK(r.best_rf.class_weight == 1.5);
    CHECK(r.best_gbdt.learning_rate == 0.2);
    REQUIRE(r.trials.size() == 8);
    for (const auto& tr : r.trials) {
      if (tr.learner == EnsembleKind::kRandomForest) CHECK(tr.mean_f1 <= r.trials[2 * r.best_rf_trial].mean_f1);
    }

    SearchSpace wide;
    wide.rf_n_estimators = {5, 15};
    wide.gbdt_n_estimators = {5, 15};
    opt.budget = 1;
    auto single = tune(d.x, rows, d.y, {}, {}, wide, opt);
    REQUIRE(single.trials.size() == 2);
    CHECK(single.best_rf == single.trials[0].rf);
    CHECK(single.best_gbdt == single.trials[1].gbdt);

    SearchSpace depth = point;
    depth.rf_max_depth = {1, 2};
    depth.gbdt_max_depth = {1, 2};
    opt.budget = 20;
    auto chosen = tune(d.x, rows, d.y, {}, {}, depth, opt);
    CHECK(chosen.best_rf.max_depth == 2);
    CHECK(chosen.best_gbdt.max_depth == 2);
    CHECK(code_of([&] {
            opt.budget = 0;
            tune(d.x, rows, d.y, {}, {}, depth, opt);
          }) == ErrorCode::kBadConfig);
  }
}
