#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sleid/common/error.hpp"
#include "sleid/riskrate/risk.hpp"
#include "sleid/synthgen/synthgen.hpp"
#include "sleid/txgraph/graph.hpp"
#include "sleid/txgraph/io.hpp"

using namespace sleid;
using namespace sleid::synthgen;

namespace {

ScenarioConfig small(std::uint64_t seed, std::size_t n = 1500) {
  ScenarioConfig c;
  c.seed = seed;
  c.n_accounts = n;
  c.illicit_fraction = 0.02;
  c.stealth = 0.0;
  return c;
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("same seed gives the same scenario") {
    auto a = generate(small(4));
    auto b = generate(small(4));
    CHECK(txgraph::to_jsonl(a.records) == txgraph::to_jsonl(b.records));
    CHECK(format_truth_csv(a) == format_truth_csv(b));
    CHECK(txgraph::format_label_book(a.observed) == txgraph::format_label_book(b.observed));
    auto c = generate(small(5));
    CHECK(txgraph::to_jsonl(a.records) != txgraph::to_jsonl(c.records));
  }

  TEST_CASE("illicit fraction") {
    for (double f : {0.0, 0.01, 0.05}) {
      auto c = small(2, 2000);
      c.illicit_fraction = f;
      auto s = generate(c);
      const auto n_ill = std::count_if(s.truth.begin(), s.truth.end(), [](const auto& t) { return t.label == 1; });
      CHECK(std::fabs(static_cast<double>(n_ill) - f * 2000) <= 1.0);
      if (f == 0.0) CHECK(s.seeds().empty());
    }
  }

  TEST_CASE("records ingest cleanly") {
    auto s = generate(small(3));
    auto g = txgraph::ingest(s.records, {}, &s.observed);
    CHECK(g.tx_count() == s.records.size());
    for (const auto& t : s.truth) CHECK(g.find(t.address).has_value());
    CHECK(std::is_sorted(s.records.begin(), s.records.end(), [](const auto& x, const auto& y) {
      return x.timestamp < y.timestamp;
    }));
  }

  TEST_CASE("archetypes carry their risk signature") {
    auto s = generate(small(6, 3000));
    auto g = txgraph::ingest(s.records);
    double wash_loop = 0, wash_licit = 0;
    std::size_t n_loop = 0, n_licit = 0;
    std::vector<double> licit_life, flash_life;
    const auto now = g.max_timestamp();
    for (const auto& t : s.truth) {
      const auto id = g.require(t.address);
      const double w = riskrate::wash_trading_score(g, id);
      const double l = riskrate::lifespan_score(g.account(id), now);
      if (t.archetype == Archetype::kWashTradeLoop) {
        wash_loop += w;
        ++n_loop;
      } else if (t.archetype == Archetype::kFlashBurst) {
        flash_life.push_back(l);
      } else if (t.label == 0) {
        wash_licit += w;
        ++n_licit;
        licit_life.push_back(l);
      }
    }
    REQUIRE(n_loop > 0);
    REQUIRE(!flash_life.empty());
    CHECK(wash_loop / n_loop > wash_licit / n_licit);
    std::sort(licit_life.begin(), licit_life.end());
    const double median = licit_life[licit_life.size() / 2];
    double mean_flash = 0;
    for (double v : flash_life) mean_flash += v;
    CHECK(mean_flash / flash_life.size() > median);
  }

  TEST_CASE("truth csv round trip") {
    auto c = small(8);
    c.stealth = 0.7;
    auto s = generate(c);
    auto back = parse_truth_csv(format_truth_csv(s));
    REQUIRE(back.size() == s.truth.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].address == s.truth[i].address);
      CHECK(back[i].label == s.truth[i].label);
      CHECK(back[i].archetype == s.truth[i].archetype);
      CHECK(back[i].stealth == doctest::Approx(s.truth[i].stealth).epsilon(1e-6));
    }
    auto legacy = parse_truth_csv("address,label,archetype\n" + s.truth[0].address + ",licit,regular\n");
    CHECK(legacy.size() == 1);
  }

  TEST_CASE("reveal bias favours blatant accounts") {
    auto c = small(11, 5000);
    c.stealth = 1.0;
    c.reveal_illicit = 0.3;
    c.reveal_bias = 6.0;
    auto s = generate(c);
    double pub = 0, hidden = 0;
    std::size_t n_pub = 0, n_hidden = 0;
    for (const auto& t : s.truth) {
      if (t.label != 1) continue;
      if (s.observed.count(t.address)) {
        pub += t.stealth;
        ++n_pub;
      } else {
        hidden += t.stealth;
        ++n_hidden;
      }
    }
    REQUIRE(n_pub > 0);
    REQUIRE(n_hidden > 0);
    CHECK(std::fabs(static_cast<double>(n_pub) - 0.3 * (n_pub + n_hidden)) <= 1.0);
    CHECK(pub / n_pub < hidden / n_hidden);
  }

  TEST_CASE("invalid configurations") {
    auto c = small(1);
    c.n_accounts = 50;
    CHECK_THROWS_AS(generate(c), Error);
    c = small(1);
    c.mix.flash_burst = 0.5;
    CHECK_THROWS_AS(generate(c), Error);
    c = small(1);
    c.reveal_bias = -1;
    CHECK_THROWS_AS(generate(c), Error);
  }
}
