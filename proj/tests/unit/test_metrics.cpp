#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../oracles.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/metrics/metrics.hpp"

using namespace sleid;
using namespace sleid::metrics;
using sleid::testing::oracle_average_precision;
using sleid::testing::oracle_metrics;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kParseError;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("perfect predictions") {
    std::vector<int> y{0, 1, 1, 0, 1};
    auto r = classification_report(y, y);
    CHECK(r.illicit.precision == 1.0);
    CHECK(r.illicit.recall == 1.0);
    CHECK(r.illicit.f1 == 1.0);
    CHECK(r.accuracy == 1.0);
  }

  TEST_CASE("degenerate all-licit predictor") {
    std::vector<int> y(100, 0), p(100, 0);
    std::fill(y.begin(), y.begin() + 10, 1);
    auto r = classification_report(y, p);
    CHECK(r.illicit.recall == 0.0);
    CHECK(r.accuracy == doctest::Approx(0.9));
    CHECK(r.zero_division);
  }

  TEST_CASE("mcc examples") {
    CHECK(mcc({5, 0, 0, 5}) == 1.0);
    CHECK(mcc({3, 7, 0, 0}) == 0.0);
    CHECK(mcc({2, 1, 1, 6}) == doctest::Approx(11.0 / 21.0).epsilon(1e-15));
  }

  TEST_CASE("pr auc examples") {
    CHECK(pr_auc(std::vector{0, 0, 1, 1}, std::vector{0.1, 0.2, 0.8, 0.9}) == 1.0);
    std::vector<int> y{1, 0, 0, 0, 1, 0, 0, 0, 0, 0};
    CHECK(pr_auc(y, std::vector<double>(10, 0.3)) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(code_of([] { pr_auc(std::vector{0, 0}, std::vector{0.1, 0.2}); }) == ErrorCode::kUndefined);
    CHECK(code_of([] { classification_report(std::vector<int>{}, std::vector<int>{}); }) == ErrorCode::kEmptyInput);
  }

  TEST_CASE("random sets match the oracles") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + rng.below(199);
      std::vector<int> t(n), p(n);
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = rng.bernoulli(0.3);
        p[i] = rng.bernoulli(0.5) ? t[i] : rng.bernoulli(0.3);
        s[i] = std::round(rng.uniform() * 20) / 20 + 0.3 * t[i];
      }
      auto r = classification_report(t, p);
      auto o = oracle_metrics(t, p);
      CHECK(r.illicit.precision == doctest::Approx(o.precision1).epsilon(1e-12));
      CHECK(r.illicit.recall == doctest::Approx(o.recall1).epsilon(1e-12));
      CHECK(std::fabs(r.illicit.f1 - o.f1_1) <= 1e-12);
      CHECK(std::fabs(r.licit.f1 - o.f1_0) <= 1e-12);
      CHECK(std::fabs(r.accuracy - o.accuracy) <= 1e-12);
      CHECK(std::fabs(r.weighted_f1 - o.weighted_f1) <= 1e-12);
      CHECK(std::fabs(r.mcc - o.mcc) <= 1e-12);
      if (std::count(t.begin(), t.end(), 1) > 0) {
        CHECK(std::fabs(pr_auc(t, s) - oracle_average_precision(t, s)) <= 1e-12);
      }
    }
  }

  TEST_CASE("weighted f1 is the support-weighted mean on every small case") {
    for (int n = 1; n <= 8; ++n) {
      for (int mask = 0; mask < (1 << (2 * n)); ++mask) {
        std::vector<int> t(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          t[static_cast<std::size_t>(i)] = (mask >> (2 * i)) & 1;
          p[static_cast<std::size_t>(i)] = (mask >> (2 * i + 1)) & 1;
        }
        auto r = classification_report(t, p);
        const double w = (static_cast<double>(r.licit.support) * r.licit.f1 +
                          static_cast<double>(r.illicit.support) * r.illicit.f1) / n;
        REQUIRE(std::fabs(r.weighted_f1 - w) <= 1e-15);
      }
    }
  }

  TEST_CASE("mcc is symmetric under a class swap") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(50);
      std::vector<int> t(n), p(n), ts(n), ps(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = rng.bernoulli(0.4);
        p[i] = rng.bernoulli(0.4);
        ts[i] = 1 - t[i];
        ps[i] = 1 - p[i];
      }
      CHECK(std::fabs(classification_report(t, p).mcc - classification_report(ts, ps).mcc) <= 1e-15);
    }
  }

  TEST_CASE("pr auc is invariant under monotone transforms") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(80);
      std::vector<int> t(n);
      std::vector<double> s(n), e(n), c(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = i == 0 ? 1 : rng.bernoulli(0.3);
        s[i] = std::round(rng.uniform() * 10) / 10;
        e[i] = std::exp(3 * s[i]);
        c[i] = s[i] * s[i] * s[i] - 7;
      }
      const double base = pr_auc(t, s);
      CHECK(pr_auc(t, e) == base);
      CHECK(pr_auc(t, c) == base);
    }
  }

  TEST_CASE("comparison table") {
    TableRow sleid{"SLEID", 0.9786, 0.9578, 0.9680, 0.9944};
    TableRow base{"RF", 0.95, 0.90, 0.9243, 0.99};
    auto t = ablation_table({base, sleid});
    const auto text = t.to_text();
    CHECK(text.find("97.86") != std::string::npos);
    CHECK(text.find("95.78") != std::string::npos);
    CHECK(text.find("96.80") != std::string::npos);
    CHECK(text.find("99.44") != std::string::npos);
    CHECK(ablation_table({base, sleid}).rows == t.rows);
    auto sorted = ablation_table({base, sleid}, true);
    CHECK(sorted.rows.front().name == "SLEID");
    CHECK(code_of([&] { ablation_table({base}); }) == ErrorCode::kBadConfig);

    Rng rng(3);
    std::vector<TableRow> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({"m" + std::to_string(i), 0, 0, std::round(rng.uniform() * 10) / 10, 0});
    auto ordered = ablation_table(rows, true);
    auto oracle = rows;
    for (std::size_t i = 1; i < oracle.size(); ++i) {
      for (std::size_t j = i; j > 0 && oracle[j - 1].f1 < oracle[j].f1; --j) std::swap(oracle[j - 1], oracle[j]);
    }
    CHECK(ordered.rows == oracle);
    CHECK(t.to_json().size() == 2);
  }
}
