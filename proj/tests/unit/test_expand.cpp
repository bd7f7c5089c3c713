#include <doctest.h>

#include <set>

#include "../oracles.hpp"
#include "../support.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/expand/expand.hpp"

using namespace sleid;
using namespace sleid::expand;
using sleid::testing::addr;
using sleid::testing::seed_with_leaves;
using sleid::testing::tx;

namespace {

const riskrate::DefiRegistry& registry() {
  static const riskrate::DefiRegistry r({addr(0xD1)});
  return r;
}

}  // namespace

TEST_SUITE("expand") {
  TEST_CASE("one seed with enough low-risk neighbours converges") {
    auto g = txgraph::ingest(seed_with_leaves(120));
    auto st = expand_dataset(g, {addr(1)}, registry());
    CHECK(st.status == ExpansionStatus::kConverged);
    CHECK(st.core.size() >= 100);
    CHECK(st.illicit_ratio() <= 0.01);
    CHECK(st.layer_index == 1);
  }

  TEST_CASE("ratio boundary at one in a hundred") {
    auto exact = expand_dataset(txgraph::ingest(seed_with_leaves(99)), {addr(1)}, registry());
    CHECK(exact.status == ExpansionStatus::kConverged);
    CHECK(exact.core.size() == 100);
    CHECK(exact.layer_index == 1);
    auto short_by_one = expand_dataset(txgraph::ingest(seed_with_leaves(98)), {addr(1)}, registry());
    CHECK(short_by_one.status == ExpansionStatus::kExhaustedFrontier);
    CHECK(short_by_one.core.size() == 99);
  }

  TEST_CASE("no admissible neighbour exhausts the frontier") {
    auto g = txgraph::ingest(std::vector{tx(1, 1, 2, 100), tx(2, 2, 3, 200)});
    auto st = expand_dataset(g, {addr(1)}, registry());
    CHECK(st.status == ExpansionStatus::kExhaustedFrontier);
    CHECK(st.illicit_ratio() == 1.0);
    REQUIRE(st.core.size() == 1);
    CHECK(st.core[0].reason == AdmissionReason::kSeed);
  }

  TEST_CASE("defi admissions") {
    auto recs = seed_with_leaves(3);
    recs.push_back(tx(900, 1, 77, 1'600'000'100));
    recs.push_back(tx(901, 77, 0xD1, 1'600'000'200, 0, txgraph::TxKind::kContractCall));
    auto st = expand_dataset(txgraph::ingest(recs), {addr(1)}, registry());
    CHECK(st.contains(addr(77)));
    for (const auto& e : st.core) {
      if (e.address == addr(77)) CHECK(e.reason == AdmissionReason::kDefi);
    }
  }

  TEST_CASE("admitted set equals the reference BFS and filter") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      Rng rng(seed);
      auto recs = seed_with_leaves(20 + rng.below(40));
      for (int i = 0; i < 400; ++i) {
        const std::uint64_t a = 1000 + rng.below(60), b = 100000 + rng.below(600);
        recs.push_back(tx(50000 + i, rng.bernoulli(0.5) ? a : b, rng.bernoulli(0.5) ? b : a,
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
        auto p = riskrate::risk_profile(g, acc.address, registry());
        if (p.is_normal || p.defi_involved) admissible.insert(acc.address);
      }
      ExpandParams params;
      params.ratio_threshold = 0.001 + 0.01 * rng.uniform();
      params.max_layers = 1 + static_cast<int>(rng.below(4));
      auto st = expand_dataset(g, {addr(1)}, registry(), params);
      auto expect = sleid::testing::oracle_expand(g, {addr(1)}, admissible, params.ratio_threshold, params.max_layers);
      std::map<std::string, int> got;
      for (const auto& e : st.core) got[e.address] = e.layer;
      CHECK(got == expect);

      // Invariants.
      CHECK(st.layer_index <= params.max_layers);
      std::size_t size = 1;
      double ratio = 1.0;
      for (const auto& l : st.admitted_per_layer) {
        size += l.admitted();
        const double r = 1.0 / static_cast<double>(size);
        CHECK(r <= ratio);
        ratio = r;
      }
      CHECK(size == st.core.size());
    }
  }

  TEST_CASE("layer cap") {
    ExpandParams p;
    p.max_layers = 0;
    auto st = expand_dataset(txgraph::ingest(seed_with_leaves(5)), {addr(1)}, registry(), p);
    CHECK(st.status == ExpansionStatus::kMaxLayers);
    CHECK(st.core.size() == 1);
  }

  TEST_CASE("errors") {
    auto g = txgraph::ingest(seed_with_leaves(2));
    CHECK_THROWS_AS(expand_dataset(g, {addr(4242)}, registry()), Error);
    try {
      expand_dataset(g, {addr(4242)}, registry());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotFound);
    }
    CHECK_THROWS_AS(expand_dataset(g, {}, registry()), Error);
  }

  TEST_CASE("labels carry over to admitted rows") {
    txgraph::LabelBook book;
    book[addr(1000)] = txgraph::LabelState::seed(txgraph::Label::kLicit);
    auto st = expand_dataset(txgraph::ingest(seed_with_leaves(120)), {addr(1)}, registry(), {}, &book);
    for (const auto& e : st.core) {
      if (e.address == addr(1000)) CHECK(e.label == txgraph::Label::kLicit);
      if (e.address == addr(1001)) CHECK(e.label == txgraph::Label::kUnknown);
      if (e.address == addr(1)) CHECK(e.label == txgraph::Label::kIllicit);
    }
  }
}
