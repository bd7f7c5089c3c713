#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "../support.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/isoforest/isoforest.hpp"

using namespace sleid;
using namespace sleid::isoforest;
using sleid::testing::matrix;

namespace {

features::FeatureMatrix gaussian_with_outliers(std::uint64_t seed, std::size_t n, std::size_t outliers) {
  Rng rng(seed);
  std::vector<double> d;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= n - outliers) {
      const double angle = rng.uniform(0, 2 * M_PI);
      const double r = rng.uniform(8, 12);
      d.push_back(r * std::cos(angle));
      d.push_back(r * std::sin(angle));
    } else {
      d.push_back(rng.normal());
      d.push_back(rng.normal());
    }
  }
  return matrix(n, 2, d);
}

double c_of(double n) {
  if (n <= 1) return 0;
  if (n == 2) return 1;
  return 2 * (std::log(n - 1) + 0.5772156649015329) - 2 * (n - 1) / n;
}

IsolationForestModel single_tree(IsoTree tree, std::uint32_t psi) {
  IsolationForestModel m;
  m.n_trees = 1;
  m.subsample_size = psi;
  m.n_features = 1;
  m.trees.push_back(std::move(tree));
  return m;
}

}  // namespace

TEST_SUITE("isoforest") {
  TEST_CASE("average path length") {
    CHECK(average_path_length(0) == 0.0);
    CHECK(average_path_length(1) == 0.0);
    CHECK(average_path_length(2) == 1.0);
    for (std::uint64_t n : {3u, 4u, 10u, 256u, 10000u}) {
      CHECK(average_path_length(n) == doctest::Approx(c_of(static_cast<double>(n))).epsilon(1e-14));
    }
  }

  TEST_CASE("identical rows score equally") {
    auto x = matrix(256, 3, std::vector<double>(256 * 3, 1.25));
    IsoParams p;
    p.seed = 3;
    auto m = fit(x, p);
    auto s = score_matrix(m, x, 1);
    for (double v : s) CHECK(v == s[0]);
  }

  TEST_CASE("fitting is deterministic and worker independent") {
    auto x = gaussian_with_outliers(1, 500, 5);
    IsoParams p;
    p.seed = 77;
    p.workers = 1;
    const auto a = serialize_model(fit(x, p));
    p.workers = 3;
    CHECK(serialize_model(fit(x, p)) == a);
    CHECK(a.substr(0, kIsoMagic.size()) == kIsoMagic);
    CHECK(serialize_model(deserialize_model(a)) == a);
  }

  TEST_CASE("planted outliers get the highest scores") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto x = gaussian_with_outliers(seed, 1000, 5);
      IsoParams p;
      p.seed = seed;
      auto s = score_matrix(fit(x, p), x, 1);
      std::vector<std::size_t> order(s.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
      std::set<std::size_t> top(order.begin(), order.begin() + 5);
      CHECK(top == std::set<std::size_t>{995, 996, 997, 998, 999});
    }
  }

  TEST_CASE("score at the expected path length is one half") {
    IsoTree leaf;
    leaf.nodes.push_back({-1, 0.0, 0, 0, 256});
    auto m = single_tree(leaf, 256);
    CHECK(anomaly_score(m, std::vector<double>{0.0}) == doctest::Approx(0.5).epsilon(1e-15));

    IsoTree shallow;
    shallow.nodes.push_back({0, 0.5, 1, 2, 0});
    shallow.nodes.push_back({-1, 0.0, 0, 0, 1});
    shallow.nodes.push_back({-1, 0.0, 0, 0, 255});
    auto m2 = single_tree(shallow, 1 << 20);
    const double s = anomaly_score(m2, std::vector<double>{0.0});
    CHECK(s == doctest::Approx(std::pow(2.0, -1.0 / c_of(1 << 20))).epsilon(1e-14));
    CHECK(s > 0.95);
  }

  TEST_CASE("hand-built depth two tree on four points") {
    IsoTree t;
    t.nodes.push_back({0, 2.5, 1, 2, 0});
    t.nodes.push_back({0, 1.5, 3, 4, 0});
    t.nodes.push_back({0, 3.5, 5, 6, 0});
    for (int i = 0; i < 4; ++i) t.nodes.push_back({-1, 0.0, 0, 0, 1});
    auto m = single_tree(t, 4);
    // Every point isolates at depth 2 with a singleton leaf.
    const double expect = std::pow(2.0, -2.0 / (2 * (std::log(3.0) + 0.5772156649015329) - 1.5));
    for (double v : {1.0, 2.0, 3.0, 4.0}) {
      CHECK(path_length(t, std::vector<double>{v}) == 2.0);
      CHECK(anomaly_score(m, std::vector<double>{v}) == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  TEST_CASE("contamination counts") {
    CHECK(contamination_count(1000, 0.005) == 5);
    CHECK(contamination_count(1000, 0.0025) == 3);
    CHECK(contamination_count(1000, 0.01) == 10);
    CHECK(contamination_count(1, 0.005) == 1);
    for (std::uint64_t n = 1; n <= 10000; ++n) {
      REQUIRE(contamination_count(n, 0.005) == (n * 5 + 999) / 1000);
      REQUIRE(contamination_count(n, 0.01) == (n + 99) / 100);
      REQUIRE(contamination_count(n, 0.0025) == (n * 25 + 9999) / 10000);
    }
  }

  TEST_CASE("partition invariants") {
    auto x = gaussian_with_outliers(4, 1000, 5);
    IsoParams p;
    p.seed = 9;
    auto m = fit(x, p);
    for (double c : {0.0025, 0.005, 0.01}) {
      auto part = partition_unknowns(m, x, c, 1);
      CHECK(part.pseudo_illicit.size() == contamination_count(1000, c));
      CHECK(part.pseudo_illicit.size() + part.filtered_unknown.size() == 1000);
      std::set<std::string> all(part.pseudo_illicit.begin(), part.pseudo_illicit.end());
      for (const auto& a : part.filtered_unknown) CHECK(all.insert(a).second);
      CHECK(all.size() == 1000);
      std::map<std::string, double> score;
      for (std::size_t i = 0; i < x.n_rows(); ++i) score[x.rows[i]] = part.scores[i];
      double min_in = 2, max_out = -1;
      for (const auto& a : part.pseudo_illicit) min_in = std::min(min_in, score[a]);
      for (const auto& a : part.filtered_unknown) max_out = std::max(max_out, score[a]);
      CHECK(min_in >= max_out);
    }
    auto part = partition_unknowns(m, x, 0.005, 1);
    for (std::size_t i = 995; i < 1000; ++i) {
      CHECK(std::binary_search(part.pseudo_illicit.begin(), part.pseudo_illicit.end(), x.rows[i]));
    }
  }

  TEST_CASE("scores do not depend on batch order") {
    auto x = gaussian_with_outliers(6, 300, 3);
    IsoParams p;
    p.seed = 2;
    auto m = fit(x, p);
    auto s = score_matrix(m, x, 1);
    std::vector<std::size_t> perm(300);
    for (std::size_t i = 0; i < 300; ++i) perm[i] = 299 - i;
    auto shuffled = x.select_rows(perm);
    auto t = score_matrix(m, shuffled, 2);
    for (std::size_t i = 0; i < 300; ++i) CHECK(t[i] == s[299 - i]);
  }

  TEST_CASE("errors") {
    auto one = matrix(1, 2, {1.0, 2.0});
    try {
      fit(one);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTooFewSamples);
    }
    auto x = gaussian_with_outliers(1, 50, 1);
    auto m = fit(x);
    auto empty = x.select_rows(std::vector<std::size_t>{});
    try {
      partition_unknowns(m, empty);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyInput);
    }
    auto other = x.select_columns(std::vector<std::string>{"c1", "c0"});
    try {
      score_matrix(m, other);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemaError);
    }
    features::FeatureVector v;
    v.schema_version = 99;
    v.values = {0.0, 0.0};
    CHECK_THROWS_AS(anomaly_score(m, v), Error);
  }
}
