#include "sleid/txgraph/graph.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"

namespace sleid::txgraph {

namespace {

std::string record_key(const TransactionRecord& r) {
  return r.tx_hash + '#' + std::to_string(r.sub_index);
}

bool key_less(const TransactionRecord& a, const TransactionRecord& b) {
  return std::tie(a.tx_hash, a.sub_index) < std::tie(b.tx_hash, b.sub_index);
}

}  // namespace

std::optional<AccountId> LedgerGraph::find(std::string_view address) const {
  auto it = index_.find(std::string(address));
  if (it == index_.end()) {
    auto norm = normalize_address(address);
    if (!norm) return std::nullopt;
    it = index_.find(*norm);
    if (it == index_.end()) return std::nullopt;
  }
  return it->second;
}

AccountId LedgerGraph::require(std::string_view address) const {
  auto id = find(address);
  if (!id) fail(ErrorCode::kNotFound, "address not in graph: " + std::string(address));
  return *id;
}

std::span<const TxId> LedgerGraph::incident(AccountId id) const {
  return {incident_.data() + incident_offsets_[id],
          incident_offsets_[id + 1] - incident_offsets_[id]};
}

std::span<const Counterparty> LedgerGraph::counterparties(AccountId id) const {
  return {cp_.data() + cp_offsets_[id], cp_offsets_[id + 1] - cp_offsets_[id]};
}

bool GraphBuilder::add(TransactionRecord record) {
  if (record.tx_hash.empty()) fail(ErrorCode::kParseError, "empty tx_hash");
  auto sender = normalize_address(record.sender);
  if (!sender) fail(ErrorCode::kParseError, "malformed sender address: " + record.sender);
  auto receiver = normalize_address(record.receiver);
  if (!receiver) fail(ErrorCode::kParseError, "malformed receiver address: " + record.receiver);
  record.sender = std::move(*sender);
  record.receiver = std::move(*receiver);
  if (record.token_contract) {
    auto token = normalize_address(*record.token_contract);
    if (!token) fail(ErrorCode::kParseError, "malformed token_contract: " + *record.token_contract);
    record.token_contract = std::move(*token);
  }
  if ((record.kind == TxKind::kErc20Transfer || record.kind == TxKind::kApprove) &&
      !record.token_contract) {
    fail(ErrorCode::kParseError, "token_contract required for " + std::string(kind_name(record.kind)));
  }
  if (options_.drop_failed && record.status == TxStatus::kFailed) return false;

  std::string key = record_key(record);
  auto it = by_key_.find(key);
  if (it != by_key_.end()) {
    if (records_[it->second] == record) return false;
    fail(ErrorCode::kConflictingRecord, "conflicting payload for transaction " + key);
  }
  by_key_.emplace(std::move(key), records_.size());
  records_.push_back(std::move(record));
  return true;
}

LedgerGraph GraphBuilder::freeze(const LabelBook* labels) && {
  LedgerGraph g;
  std::sort(records_.begin(), records_.end(), key_less);

  // Block ordering: the latest timestamp of a block may not exceed the
  // earliest timestamp of any later block.
  {
    std::map<std::uint64_t, std::pair<std::int64_t, std::int64_t>> blocks;
    for (const auto& r : records_) {
      auto [it, inserted] = blocks.try_emplace(r.block_height, r.timestamp, r.timestamp);
      if (!inserted) {
        it->second.first = std::min(it->second.first, r.timestamp);
        it->second.second = std::max(it->second.second, r.timestamp);
      }
    }
    bool first = true;
    std::int64_t prev_max = 0;
    std::uint64_t prev_block = 0;
    for (const auto& [block, range] : blocks) {
      if (!first && range.first < prev_max) {
        fail(ErrorCode::kOrderingViolation,
             "block " + std::to_string(block) + " has a timestamp earlier than block " +
                 std::to_string(prev_block));
      }
      first = false;
      prev_max = std::max(prev_max, range.second);
      prev_block = block;
    }
  }

  std::vector<std::string> addresses;
  addresses.reserve(records_.size() * 2);
  for (const auto& r : records_) {
    addresses.push_back(r.sender);
    addresses.push_back(r.receiver);
  }
  std::sort(addresses.begin(), addresses.end());
  addresses.erase(std::unique(addresses.begin(), addresses.end()), addresses.end());

  g.accounts_.resize(addresses.size());
  g.index_.reserve(addresses.size());
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    g.index_.emplace(addresses[i], static_cast<AccountId>(i));
    g.accounts_[i].address = addresses[i];
    if (labels) {
      auto it = labels->find(addresses[i]);
      if (it != labels->end()) g.accounts_[i].label = it->second;
    }
  }

  g.txs_.reserve(records_.size());
  std::vector<std::uint32_t> incident_count(addresses.size(), 0);
  for (auto& r : records_) {
    TxNode node;
    node.sender = g.index_.at(r.sender);
    node.receiver = g.index_.at(r.receiver);
    node.record = std::move(r);
    ++incident_count[node.sender];
    if (!node.is_self()) ++incident_count[node.receiver];
    g.txs_.push_back(std::move(node));
  }
  records_.clear();
  by_key_.clear();

  const std::size_t n_accounts = g.accounts_.size();
  g.incident_offsets_.assign(n_accounts + 1, 0);
  for (std::size_t i = 0; i < n_accounts; ++i) {
    g.incident_offsets_[i + 1] = g.incident_offsets_[i] + incident_count[i];
  }
  g.incident_.resize(g.incident_offsets_.back());
  {
    std::vector<std::uint32_t> cursor(g.incident_offsets_.begin(), g.incident_offsets_.end() - 1);
    for (TxId t = 0; t < g.txs_.size(); ++t) {
      const auto& node = g.txs_[t];
      g.incident_[cursor[node.sender]++] = t;
      if (!node.is_self()) g.incident_[cursor[node.receiver]++] = t;
    }
  }

  g.cp_offsets_.assign(n_accounts + 1, 0);
  for (AccountId a = 0; a < n_accounts; ++a) {
    auto begin = g.incident_.begin() + g.incident_offsets_[a];
    auto end = g.incident_.begin() + g.incident_offsets_[a + 1];
    std::sort(begin, end, [&](TxId x, TxId y) {
      const auto& rx = g.txs_[x].record;
      const auto& ry = g.txs_[y].record;
      return std::tie(rx.timestamp, rx.block_height, x) < std::tie(ry.timestamp, ry.block_height, y);
    });

    AccountNode& acc = g.accounts_[a];
    std::vector<Counterparty> cps;
    std::vector<std::string_view> tokens;
    std::vector<std::uint32_t> methods;
    bool first = true;
    for (auto it = begin; it != end; ++it) {
      const TxNode& node = g.txs_[*it];
      const auto& r = node.record;
      if (first) {
        acc.first_seen = acc.last_seen = r.timestamp;
        first = false;
      }
      acc.first_seen = std::min(acc.first_seen, r.timestamp);
      acc.last_seen = std::max(acc.last_seen, r.timestamp);
      if (node.sender == a) {
        ++acc.n_tx_out;
        if (r.method_id) methods.push_back(*r.method_id);
      }
      if (node.receiver == a) ++acc.n_tx_in;
      if (node.is_self()) {
        ++acc.self_tx_count;
      } else {
        const AccountId other = node.sender == a ? node.receiver : node.sender;
        cps.push_back(Counterparty{other, node.sender == a ? 1u : 0u, node.sender == a ? 0u : 1u});
      }
      if (r.token_contract) tokens.push_back(*r.token_contract);
    }
    acc.n_tx_total = acc.n_tx_in + acc.n_tx_out - acc.self_tx_count;

    std::sort(cps.begin(), cps.end(), [](const auto& x, const auto& y) { return x.other < y.other; });
    std::vector<Counterparty> merged;
    for (const auto& c : cps) {
      if (!merged.empty() && merged.back().other == c.other) {
        merged.back().n_out += c.n_out;
        merged.back().n_in += c.n_in;
      } else {
        merged.push_back(c);
      }
    }
    for (const auto& c : merged) {
      if (c.n_in > 0) ++acc.in_degree;
      if (c.n_out > 0) ++acc.out_degree;
    }
    acc.n_counterparties = static_cast<std::uint32_t>(merged.size());
    std::sort(tokens.begin(), tokens.end());
    acc.distinct_tokens = static_cast<std::uint32_t>(std::unique(tokens.begin(), tokens.end()) - tokens.begin());
    std::sort(methods.begin(), methods.end());
    acc.distinct_methods = static_cast<std::uint32_t>(std::unique(methods.begin(), methods.end()) - methods.begin());

    g.cp_offsets_[a + 1] = g.cp_offsets_[a] + static_cast<std::uint32_t>(merged.size());
    g.cp_.insert(g.cp_.end(), merged.begin(), merged.end());
  }

  if (!g.txs_.empty()) {
    g.min_ts_ = g.txs_.front().record.timestamp;
    g.max_ts_ = g.min_ts_;
    for (const auto& t : g.txs_) {
      g.min_ts_ = std::min(g.min_ts_, t.record.timestamp);
      g.max_ts_ = std::max(g.max_ts_, t.record.timestamp);
    }
  }
  return g;
}

LedgerGraph ingest(std::span<const TransactionRecord> records, IngestOptions options,
                   const LabelBook* labels) {
  GraphBuilder builder(options);
  for (const auto& r : records) builder.add(r);
  return std::move(builder).freeze(labels);
}

std::vector<AccountId> neighbor_ids(const LedgerGraph& graph, AccountId id, int order) {
  if (order != 1 && order != 2) fail(ErrorCode::kBadConfig, "neighbor order must be 1 or 2");
  std::vector<AccountId> out;
  for (const auto& c : graph.counterparties(id)) out.push_back(c.other);
  if (order == 2) {
    const std::size_t first_ring = out.size();
    for (std::size_t i = 0; i < first_ring; ++i) {
      for (const auto& c : graph.counterparties(out[i])) {
        if (c.other != id) out.push_back(c.other);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

std::vector<std::string> neighbors(const LedgerGraph& graph, std::string_view address, int order) {
  const AccountId id = graph.require(address);
  std::vector<std::string> out;
  for (AccountId n : neighbor_ids(graph, id, order)) out.push_back(graph.account(n).address);
  return out;
}

AccountNode account_summary(const LedgerGraph& graph, std::string_view address) {
  return graph.account(graph.require(address));
}

std::string serialize_graph(const LedgerGraph& graph) {
  ByteWriter w;
  w.raw(kGraphMagic);
  w.u32(kGraphFormatVersion);
  // Section 1: address table.
  w.u64(graph.account_count());
  for (const auto& acc : graph.accounts()) w.str(acc.address);
  // Section 2: edge list, one entry per transaction node.
  w.u64(graph.tx_count());
  for (const auto& node : graph.txs()) {
    const auto& r = node.record;
    w.str(r.tx_hash);
    w.u32(r.sub_index);
    w.u64(r.block_height);
    w.i64(r.timestamp);
    w.u32(node.sender);
    w.u32(node.receiver);
    w.u128(r.native_value);
    w.u128(r.fee);
    w.u8(static_cast<std::uint8_t>(r.kind));
    w.str(r.token_contract.value_or(""));
    w.u8(r.method_id ? 1 : 0);
    w.u32(r.method_id.value_or(0));
    w.u128(r.token_value);
    w.u8(static_cast<std::uint8_t>(r.status));
  }
  return w.take();
}

LedgerGraph deserialize_graph(std::string_view bytes) {
  ByteReader rd(bytes);
  rd.expect_magic(kGraphMagic);
  const std::uint32_t version = rd.u32();
  if (version != kGraphFormatVersion) {
    fail(ErrorCode::kFormatError, "unsupported graph format version " + std::to_string(version));
  }
  const std::uint64_t n_accounts = rd.u64();
  std::vector<std::string> addresses;
  addresses.reserve(n_accounts);
  for (std::uint64_t i = 0; i < n_accounts; ++i) addresses.push_back(rd.str());
  const std::uint64_t n_tx = rd.u64();
  GraphBuilder builder;
  for (std::uint64_t i = 0; i < n_tx; ++i) {
    TransactionRecord r;
    r.tx_hash = rd.str();
    r.sub_index = rd.u32();
    r.block_height = rd.u64();
    r.timestamp = rd.i64();
    const std::uint32_t s = rd.u32();
    const std::uint32_t t = rd.u32();
    if (s >= n_accounts || t >= n_accounts) fail(ErrorCode::kFormatError, "account index out of range");
    r.sender = addresses[s];
    r.receiver = addresses[t];
    r.native_value = rd.u128();
    r.fee = rd.u128();
    const std::uint8_t kind = rd.u8();
    if (kind > 3) fail(ErrorCode::kFormatError, "bad transaction kind");
    r.kind = static_cast<TxKind>(kind);
    std::string token = rd.str();
    if (!token.empty()) r.token_contract = std::move(token);
    const bool has_method = rd.u8() != 0;
    const std::uint32_t method = rd.u32();
    if (has_method) r.method_id = method;
    r.token_value = rd.u128();
    r.status = rd.u8() == 0 ? TxStatus::kSuccess : TxStatus::kFailed;
    builder.add(std::move(r));
  }
  if (!rd.at_end()) fail(ErrorCode::kFormatError, "trailing bytes after graph container");
  return std::move(builder).freeze();
}

}  // namespace sleid::txgraph
