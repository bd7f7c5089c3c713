#include <doctest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "../support.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/txgraph/graph.hpp"
#include "sleid/txgraph/io.hpp"
#include "sleid/txgraph/labels.hpp"

using namespace sleid;
using namespace sleid::txgraph;
using sleid::testing::addr;
using sleid::testing::tx;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kUndefined;
}

std::vector<TransactionRecord> random_records(std::uint64_t seed, std::size_t n_accounts, std::size_t n_tx) {
  Rng rng(seed);
  std::vector<TransactionRecord> out;
  for (std::size_t i = 0; i < n_tx; ++i) {
    const auto a = rng.below(n_accounts) + 1;
    const auto b = rng.below(n_accounts) + 1;
    const auto kind = static_cast<TxKind>(rng.below(4));
    auto r = tx(i + 1, a, b, 1'600'000'000 + static_cast<std::int64_t>(i) * 13, 0, kind);
    r.block_height = 1000 + i / 3;
    r.fee = 1 + rng.below(1'000'000'000);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("txgraph") {
  TEST_CASE("empty stream gives an empty graph") {
    auto g = ingest(std::vector<TransactionRecord>{});
    CHECK(g.account_count() == 0);
    CHECK(g.tx_count() == 0);
  }

  TEST_CASE("single record") {
    auto g = ingest(std::vector{tx(1, 1, 2, 100)});
    CHECK(g.account_count() == 2);
    CHECK(g.tx_count() == 1);
    CHECK(account_summary(g, addr(1)).out_degree == 1);
    CHECK(account_summary(g, addr(2)).in_degree == 1);
    const auto a = account_summary(g, addr(1));
    CHECK(a.n_tx_out == 1);
    CHECK(a.n_tx_in == 0);
  }

  TEST_CASE("self loop and reciprocal edges") {
    auto g = ingest(std::vector{tx(1, 1, 2, 100), tx(2, 2, 1, 101), tx(3, 1, 1, 102)});
    const auto a = account_summary(g, addr(1));
    CHECK(a.self_tx_count == 1);
    CHECK(a.n_tx_total == 3);
    auto cps = g.counterparties(g.require(addr(1)));
    REQUIRE(cps.size() == 1);
    CHECK(cps[0].total() >= 2);

    auto solo = ingest(std::vector{tx(9, 7, 7, 5)});
    const auto s = account_summary(solo, addr(7));
    CHECK(s.self_tx_count == 1);
    CHECK(s.n_tx_total == 1);
  }

  TEST_CASE("neighbors on a chain and a star") {
    auto chain = ingest(std::vector{tx(1, 1, 2, 100), tx(2, 2, 3, 101)});
    CHECK(neighbors(chain, addr(1), 1) == std::vector{addr(2)});
    CHECK(neighbors(chain, addr(1), 2) == std::vector{addr(2), addr(3)});
    CHECK(code_of([&] { neighbors(chain, addr(99), 1); }) == ErrorCode::kNotFound);
    CHECK(code_of([&] { account_summary(chain, addr(99)); }) == ErrorCode::kNotFound);

    std::vector<TransactionRecord> star;
    for (int leaf = 1; leaf <= 5; ++leaf) star.push_back(tx(leaf, 100, leaf, 100 + leaf));
    auto g = ingest(star);
    CHECK(neighbors(g, addr(1), 2) == std::vector{addr(2), addr(3), addr(4), addr(5), addr(100)});
  }

  TEST_CASE("counters equal a naive recount") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto recs = random_records(seed, 6, 10);
      auto g = ingest(recs);
      std::size_t out_sum = 0;
      for (const auto& acc : g.accounts()) {
        std::uint32_t in = 0, out = 0, self = 0;
        std::set<std::string> senders, receivers, cps;
        for (const auto& r : recs) {
          if (r.sender == acc.address) ++out;
          if (r.receiver == acc.address) ++in;
          if (r.sender == acc.address && r.receiver == acc.address) ++self;
          if (r.receiver == acc.address && r.sender != acc.address) senders.insert(r.sender), cps.insert(r.sender);
          if (r.sender == acc.address && r.receiver != acc.address) receivers.insert(r.receiver), cps.insert(r.receiver);
        }
        CHECK(acc.n_tx_in == in);
        CHECK(acc.n_tx_out == out);
        CHECK(acc.self_tx_count == self);
        CHECK(acc.n_tx_total == in + out - self);
        CHECK(acc.in_degree == senders.size());
        CHECK(acc.out_degree == receivers.size());
        CHECK(acc.n_counterparties == cps.size());
        out_sum += acc.n_tx_out;
      }
      CHECK(out_sum == g.tx_count());
    }
  }

  TEST_CASE("ingest is permutation invariant") {
    auto recs = random_records(7, 40, 300);
    const auto canonical = serialize_graph(ingest(recs));
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
      rng.shuffle(recs);
      CHECK(serialize_graph(ingest(recs)) == canonical);
    }
    CHECK(serialize_graph(deserialize_graph(canonical)) == canonical);
    CHECK(canonical.substr(0, kGraphMagic.size()) == kGraphMagic);
  }

  TEST_CASE("second-order neighbors equal a depth-2 BFS") {
    for (std::uint64_t seed : {11u, 12u}) {
      const std::size_t n = seed == 11 ? 60 : 1000;
      auto recs = random_records(seed, n, n * 2);
      auto g = ingest(recs);
      std::map<std::string, std::set<std::string>> adj;
      for (const auto& r : recs) {
        if (r.sender == r.receiver) continue;
        adj[r.sender].insert(r.receiver);
        adj[r.receiver].insert(r.sender);
      }
      for (const auto& acc : g.accounts()) {
        std::map<std::string, int> dist{{acc.address, 0}};
        std::queue<std::string> q;
        q.push(acc.address);
        while (!q.empty()) {
          auto u = q.front();
          q.pop();
          if (dist[u] == 2) continue;
          for (const auto& v : adj[u]) {
            if (!dist.count(v)) {
              dist[v] = dist[u] + 1;
              q.push(v);
            }
          }
        }
        std::vector<std::string> expect;
        for (const auto& [a, d] : dist) {
          if (d > 0) expect.push_back(a);
        }
        REQUIRE(neighbors(g, acc.address, 2) == expect);
      }
    }
  }

  TEST_CASE("duplicate hash with a different payload conflicts") {
    auto a = tx(1, 1, 2, 100);
    auto b = a;
    b.native_value = 6;
    CHECK(code_of([&] { ingest(std::vector{a, b}); }) == ErrorCode::kConflictingRecord);
    CHECK(ingest(std::vector{a, a}).tx_count() == 1);
  }

  TEST_CASE("higher block with an earlier timestamp is an ordering violation") {
    auto a = tx(1, 1, 2, 200, 10);
    auto b = tx(2, 2, 3, 100, 11);
    CHECK(code_of([&] { ingest(std::vector{a, b}); }) == ErrorCode::kOrderingViolation);
  }

  TEST_CASE("malformed address reports the line number") {
    const std::string good = to_jsonl(std::vector{tx(1, 1, 2, 100)});
    std::string bad = good + good;
    const auto pos = bad.find(addr(1), good.size());
    bad.replace(pos, 4, "0xzz");
    try {
      parse_jsonl(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("jsonl and csv round trip") {
    auto recs = random_records(5, 10, 30);
    recs[3].status = TxStatus::kFailed;
    recs[4].method_id = 0xa9059cbb;
    recs[5].native_value = static_cast<Wei>(1) << 100;
    CHECK(parse_jsonl(to_jsonl(recs)) == recs);
    CHECK(parse_csv(to_csv(recs)) == recs);
    IngestOptions drop;
    drop.drop_failed = true;
    CHECK(ingest(recs, drop).tx_count() == recs.size() - 1);
  }

  TEST_CASE("label lattice") {
    auto s = LabelState::seed(Label::kIllicit);
    CHECK(code_of([&] { s.transition(Label::kLicit, Provenance::kSelfTraining); }) == ErrorCode::kInvalidTransition);
    auto u = LabelState::unknown();
    CHECK(u.transition(Label::kPseudoIllicit, Provenance::kIsolationForest).label() == Label::kPseudoIllicit);
    auto book = parse_label_book("address,label\n" + addr(1) + ",illicit\n" + addr(2) + ",licit\n");
    CHECK(book.size() == 2);
    CHECK(parse_label_book(format_label_book(book)) == book);
  }
}
