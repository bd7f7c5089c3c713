#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sleid/txgraph/labels.hpp"
#include "sleid/txgraph/record.hpp"

namespace sleid::txgraph {

using AccountId = std::uint32_t;
using TxId = std::uint32_t;

struct AccountNode {
  std::string address;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::uint32_t n_tx_in = 0;        // transactions received (self-loops included)
  std::uint32_t n_tx_out = 0;       // transactions sent (self-loops included)
  std::uint32_t self_tx_count = 0;
  std::uint32_t n_tx_total = 0;     // distinct transactions: in + out - self
  std::uint32_t in_degree = 0;      // distinct senders, excluding self
  std::uint32_t out_degree = 0;     // distinct receivers, excluding self
  std::uint32_t n_counterparties = 0;
  std::uint32_t distinct_tokens = 0;
  std::uint32_t distinct_methods = 0;
  LabelState label;

  bool operator==(const AccountNode&) const = default;
};

// Transaction node of the bipartite graph: exactly one sender and one receiver
// account node per flattened record.
struct TxNode {
  TransactionRecord record;
  AccountId sender = 0;
  AccountId receiver = 0;

  bool is_self() const { return sender == receiver; }
};

// Aggregated pairwise relation from the point of view of one account.
struct Counterparty {
  AccountId other = 0;
  std::uint32_t n_out = 0;  // this -> other
  std::uint32_t n_in = 0;   // other -> this
  std::uint32_t total() const { return n_out + n_in; }
};

// Frozen, read-only bipartite account/transaction graph. Safe to share across
// threads; every query is const.
class LedgerGraph {
 public:
  LedgerGraph() = default;

  std::size_t account_count() const { return accounts_.size(); }
  std::size_t tx_count() const { return txs_.size(); }

  // Accounts are indexed in lexicographic address order.
  const std::vector<AccountNode>& accounts() const { return accounts_; }
  const AccountNode& account(AccountId id) const { return accounts_[id]; }
  const TxNode& tx(TxId id) const { return txs_[id]; }
  const std::vector<TxNode>& txs() const { return txs_; }

  std::optional<AccountId> find(std::string_view address) const;
  // Throws kNotFound.
  AccountId require(std::string_view address) const;

  // Transactions touching the account ordered by (timestamp, block, tx id);
  // a self-loop appears once.
  std::span<const TxId> incident(AccountId id) const;
  // Distinct counterparties (self excluded) ordered by account id.
  std::span<const Counterparty> counterparties(AccountId id) const;

  std::int64_t min_timestamp() const { return min_ts_; }
  std::int64_t max_timestamp() const { return max_ts_; }

 private:
  friend class GraphBuilder;

  std::vector<AccountNode> accounts_;
  std::unordered_map<std::string, AccountId> index_;
  std::vector<TxNode> txs_;
  std::vector<std::uint32_t> incident_offsets_;
  std::vector<TxId> incident_;
  std::vector<std::uint32_t> cp_offsets_;
  std::vector<Counterparty> cp_;
  std::int64_t min_ts_ = 0;
  std::int64_t max_ts_ = 0;
};

struct IngestOptions {
  bool drop_failed = false;
};

// Append-only, single-writer accumulator. freeze() validates cross-record
// invariants and produces the immutable graph.
class GraphBuilder {
 public:
  explicit GraphBuilder(IngestOptions options = {}) : options_(options) {}

  // Normalizes and validates the record. Returns false when the record is an
  // exact duplicate (idempotent) or was dropped by the failure filter.
  // Throws kParseError for malformed records and kConflictingRecord when the
  // (tx_hash, sub_index) key is already bound to a different payload.
  bool add(TransactionRecord record);

  std::size_t size() const { return records_.size(); }

  // Throws kOrderingViolation when a higher block carries an earlier timestamp.
  LedgerGraph freeze(const LabelBook* labels = nullptr) &&;

 private:
  IngestOptions options_;
  std::vector<TransactionRecord> records_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

LedgerGraph ingest(std::span<const TransactionRecord> records, IngestOptions options = {},
                   const LabelBook* labels = nullptr);

// order 1: distinct counterparties. order 2: everything within two hops.
// The query address is never part of the result. Sorted, no duplicates.
std::vector<std::string> neighbors(const LedgerGraph& graph, std::string_view address, int order);
std::vector<AccountId> neighbor_ids(const LedgerGraph& graph, AccountId id, int order);

AccountNode account_summary(const LedgerGraph& graph, std::string_view address);

// Canonical SLGRAPH container. Byte-identical for graphs built from any
// permutation of the same record set.
std::string serialize_graph(const LedgerGraph& graph);
LedgerGraph deserialize_graph(std::string_view bytes);

inline constexpr std::string_view kGraphMagic{"SLGRAPH\x01", 8};
inline constexpr std::uint32_t kGraphFormatVersion = 1;

}  // namespace sleid::txgraph
