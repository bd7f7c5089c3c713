#include "sleid/features/extract.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/features/schema.hpp"

namespace sleid::features {

using txgraph::AccountId;
using txgraph::LedgerGraph;
using txgraph::TxKind;

namespace {

bool is_token_event(TxKind k) { return k == TxKind::kErc20Transfer || k == TxKind::kApprove; }
bool carries_native_value(TxKind k) { return k == TxKind::kNativeTransfer || k == TxKind::kContractCall; }

// Appends values in canonical order and checks each name against the
// inventory so the two lists cannot drift apart.
class Row {
 public:
  Row() : inv_(feature_inventory()) { values_.reserve(inv_.size()); }

  void put(std::string_view name, double v) {
    if (values_.size() >= inv_.size() || inv_[values_.size()].name != name) {
      fail(ErrorCode::kSchemaError, "feature order mismatch at " + std::string(name));
    }
    values_.push_back(v);
  }

  void put_summary(std::string_view prefix, const Summary& s, bool min_before_max = false) {
    const std::string p(prefix);
    put(p + "_mean", s.mean);
    if (min_before_max) {
      put(p + "_min", s.min);
      put(p + "_max", s.max);
    } else {
      put(p + "_max", s.max);
      put(p + "_min", s.min);
    }
    put(p + "_median", s.median);
    put(p + "_std", s.std);
  }

  std::vector<double> take() {
    if (values_.size() != inv_.size()) fail(ErrorCode::kSchemaError, "incomplete feature vector");
    return std::move(values_);
  }

 private:
  std::span<const FeatureSpec> inv_;
  std::vector<double> values_;
};

// Largest sum of `weights` over any window [t, t + width) anchored at an event.
double max_window_sum(const std::vector<std::int64_t>& ts, const std::vector<double>& weights,
                      std::int64_t width) {
  double best = 0.0;
  double running = 0.0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < ts.size(); ++lo) {
    while (hi < ts.size() && ts[hi] < ts[lo] + width) running += weights[hi++];
    best = std::max(best, running);
    running -= weights[lo];
  }
  return best;
}

// Peak windowed amount divided by the mean hourly amount over the active span.
double burstiness(const std::vector<std::int64_t>& ts, const std::vector<double>& weights) {
  if (ts.empty()) return kMissing;
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return kMissing;
  const double span_hours =
      static_cast<double>(ts.back() - ts.front()) / static_cast<double>(kBurstWindowSeconds);
  const double rate = total / std::max(1.0, span_hours);
  return max_window_sum(ts, weights, kBurstWindowSeconds) / rate;
}

// 1 - std(gaps) / mean(gaps), floored at 0. Population std over the gaps so a
// two-transaction account is perfectly regular.
double consistency(const std::vector<std::int64_t>& ts) {
  if (ts.size() < 2) return kMissing;
  std::vector<double> gaps;
  gaps.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(static_cast<double>(ts[i] - ts[i - 1]));
  const double m = mean_of(gaps);
  if (m <= 0.0) return 0.0;
  double ss = 0.0;
  for (double g : gaps) ss += (g - m) * (g - m);
  const double sd = std::sqrt(ss / static_cast<double>(gaps.size()));
  return std::max(0.0, 1.0 - sd / m);
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

template <typename BaseFn>
std::vector<double> compute(const LedgerGraph& g, AccountId id, BaseFn&& base_of) {
  const auto& acc = g.account(id);
  const auto incident = g.incident(id);
  const auto cps = g.counterparties(id);
  Row row;

  // Graph-related.
  row.put("in_degree", acc.in_degree);
  row.put("out_degree", acc.out_degree);
  row.put("total_degree", acc.in_degree + acc.out_degree);
  row.put("neighbors", acc.n_counterparties);
  std::vector<double> nin, nout, ntot, per_neighbor, nb_mean_fee, nb_max_fee, nb_mean_erc, nb_max_erc;
  std::size_t multi = 0;
  for (const auto& cp : cps) {
    const AccountBase b = base_of(cp.other);
    nin.push_back(b.in_degree);
    nout.push_back(b.out_degree);
    ntot.push_back(b.total_degree);
    per_neighbor.push_back(cp.total());
    nb_mean_fee.push_back(b.mean_tx_fee);
    nb_max_fee.push_back(b.max_tx_fee);
    if (!std::isnan(b.mean_erc_fee)) {
      nb_mean_erc.push_back(b.mean_erc_fee);
      nb_max_erc.push_back(b.max_erc_fee);
    }
    if (cp.total() >= 2) ++multi;
  }
  row.put_summary("in_degree", summarize(nin));
  row.put_summary("out_degree", summarize(nout));
  row.put_summary("total_degree", summarize(ntot));
  row.put_summary("tx_per_neighbor", summarize(per_neighbor), true);
  row.put("multi_transacted_neighbors", static_cast<double>(multi));

  // Walk the account's transactions once.
  std::vector<std::int64_t> ts, erc_ts;
  std::vector<double> fees, erc_fees, out_native, in_native, out_erc, in_erc, ones;
  std::vector<std::uint64_t> blocks;
  double first_sent = kMissing, last_sent = kMissing, first_recv = kMissing, last_recv = kMissing;
  std::size_t n_transfers = 0, n_erc = 0, n_approve = 0;
  for (auto tid : incident) {
    const auto& t = g.tx(tid);
    const auto& r = t.record;
    const bool sent = t.sender == id;
    const bool recv = t.receiver == id;
    const double fee = txgraph::wei_to_ether(r.fee);
    const double block = static_cast<double>(r.block_height);
    ts.push_back(r.timestamp);
    ones.push_back(1.0);
    fees.push_back(fee);
    blocks.push_back(r.block_height);
    if (sent) {
      if (std::isnan(first_sent) || block < first_sent) first_sent = block;
      if (std::isnan(last_sent) || block > last_sent) last_sent = block;
    }
    if (recv) {
      if (std::isnan(first_recv) || block < first_recv) first_recv = block;
      if (std::isnan(last_recv) || block > last_recv) last_recv = block;
    }
    if (r.kind == TxKind::kNativeTransfer || r.kind == TxKind::kErc20Transfer) ++n_transfers;
    if (r.kind == TxKind::kErc20Transfer) ++n_erc;
    if (r.kind == TxKind::kApprove) ++n_approve;
    if (is_token_event(r.kind)) {
      erc_ts.push_back(r.timestamp);
      erc_fees.push_back(fee);
    }
    if (carries_native_value(r.kind)) {
      const double v = txgraph::wei_to_ether(r.native_value);
      if (sent) out_native.push_back(v);
      if (recv) in_native.push_back(v);
    }
    if (r.kind == TxKind::kErc20Transfer) {
      const double v = txgraph::wei_to_ether(r.token_value);
      if (sent) out_erc.push_back(v);
      if (recv) in_erc.push_back(v);
    }
  }

  // Temporal.
  std::vector<std::uint64_t> sorted_blocks = blocks;
  std::sort(sorted_blocks.begin(), sorted_blocks.end());
  std::size_t n_blocks = 0, run = 0, max_per_block = 0;
  for (std::size_t i = 0; i < sorted_blocks.size(); ++i) {
    if (i == 0 || sorted_blocks[i] != sorted_blocks[i - 1]) {
      ++n_blocks;
      run = 0;
    }
    max_per_block = std::max(max_per_block, ++run);
  }
  row.put("n_blocks", static_cast<double>(n_blocks));
  row.put("min_block", sorted_blocks.empty() ? kMissing : static_cast<double>(sorted_blocks.front()));
  row.put("max_block", sorted_blocks.empty() ? kMissing : static_cast<double>(sorted_blocks.back()));
  row.put("block_height_first_sent_in", first_sent);
  row.put("block_height_first_received_in", first_recv);
  row.put("block_height_last_sent_in", last_sent);
  row.put("block_height_last_received_in", last_recv);
  row.put("transacted_first", static_cast<double>(acc.first_seen));
  row.put("transacted_last", static_cast<double>(acc.last_seen));
  row.put("Age", static_cast<double>(acc.last_seen - acc.first_seen) / 86400.0);
  row.put("tx_per_block_mean",
          n_blocks == 0 ? kMissing : static_cast<double>(incident.size()) / static_cast<double>(n_blocks));
  row.put("tx_per_block_max", n_blocks == 0 ? kMissing : static_cast<double>(max_per_block));
  row.put("consistency", consistency(ts));
  row.put("burst", burstiness(ts, ones));

  // Node.
  row.put("n_tx", acc.n_tx_in + acc.n_tx_out);
  row.put("n_tx_out", acc.n_tx_out);
  row.put("n_tx_in", acc.n_tx_in);
  row.put("n_tx_total", acc.n_tx_total);
  row.put("self_tx_count", acc.self_tx_count);
  row.put("n_tokens", acc.distinct_tokens);
  row.put("n_method", acc.distinct_methods);

  // Transaction.
  row.put("n_transfers", static_cast<double>(n_transfers));
  row.put("n_ERC", static_cast<double>(n_erc));
  row.put("n_approve", static_cast<double>(n_approve));
  const Summary fee_s = summarize(fees);
  row.put("mean_tx_fee", fee_s.mean);
  row.put("median_tx_fee", fee_s.median);
  row.put("max_tx_fee", fee_s.max);
  row.put("min_tx_fee", fee_s.min);
  row.put("std_tx_fee", fee_s.std);
  const Summary erc_s = summarize(erc_fees);
  row.put("mean_erc_fee", erc_s.mean);
  row.put("median_erc_fee", erc_s.median);
  row.put("max_erc_fee", erc_s.max);
  row.put("min_erc_fee", erc_s.min);
  row.put("std_erc_fee", erc_s.std);
  const Summary out_n = summarize(out_native);
  const Summary in_n = summarize(in_native);
  row.put("mean_out_value_transfer", out_n.mean);
  row.put("median_out_value_transfer", out_n.median);
  row.put("mean_in_value_transfers", in_n.mean);
  row.put("median_in_value_transfers", in_n.median);
  row.put("sum_out_value_transfer", sum_of(out_native));
  row.put("sum_in_value_transfer", sum_of(in_native));
  row.put("std_out_value_transfer", out_n.std);
  row.put("std_in_value_transfer", in_n.std);
  const Summary out_e = summarize(out_erc);
  const Summary in_e = summarize(in_erc);
  row.put("sum_out_value_ERC", sum_of(out_erc));
  row.put("sum_in_value_ERC", sum_of(in_erc));
  row.put("mean_in_value_ERC", in_e.mean);
  row.put("mean_out_value_ERC", out_e.mean);
  row.put("median_in_value_ERC", in_e.median);
  row.put("median_out_value_ERC", out_e.median);
  row.put("std_out_value_ERC", out_e.std);
  row.put("std_in_value_ERC", in_e.std);

  // Volatility.
  row.put("burst_tx_fee", burstiness(ts, fees));
  row.put("burst_erc_fee", burstiness(erc_ts, erc_fees));

  // Neighborhood.
  row.put_summary("mean_tx_fee_neighbor", summarize(nb_mean_fee));
  row.put_summary("max_tx_fee_neighbor", summarize(nb_max_fee));
  row.put_summary("mean_erc_fee_neighbor", summarize(nb_mean_erc));
  row.put_summary("max_erc_fee_neighbor", summarize(nb_max_erc));

  return row.take();
}

}  // namespace

AccountBase account_base(const LedgerGraph& g, AccountId id) {
  const auto& acc = g.account(id);
  AccountBase b;
  b.in_degree = acc.in_degree;
  b.out_degree = acc.out_degree;
  b.total_degree = acc.in_degree + acc.out_degree;
  double sum = 0.0, mx = 0.0, erc_sum = 0.0, erc_mx = 0.0;
  std::size_t n = 0, erc_n = 0;
  for (auto tid : g.incident(id)) {
    const auto& r = g.tx(tid).record;
    const double fee = txgraph::wei_to_ether(r.fee);
    sum += fee;
    mx = n == 0 ? fee : std::max(mx, fee);
    ++n;
    if (is_token_event(r.kind)) {
      erc_sum += fee;
      erc_mx = erc_n == 0 ? fee : std::max(erc_mx, fee);
      ++erc_n;
    }
  }
  b.mean_tx_fee = n ? sum / static_cast<double>(n) : kMissing;
  b.max_tx_fee = n ? mx : kMissing;
  b.mean_erc_fee = erc_n ? erc_sum / static_cast<double>(erc_n) : kMissing;
  b.max_erc_fee = erc_n ? erc_mx : kMissing;
  return b;
}

FeatureVector extract_features(const LedgerGraph& graph, std::string_view address) {
  const AccountId id = graph.require(address);
  FeatureVector v;
  v.schema_version = kSchemaVersion;
  v.values = compute(graph, id, [&](AccountId other) { return account_base(graph, other); });
  return v;
}

FeatureExtractor::FeatureExtractor(const LedgerGraph& graph, int workers)
    : graph_(graph), bases_(graph.account_count()) {
  parallel_for(bases_.size(), workers, [&](std::size_t i) {
    bases_[i] = account_base(graph_, static_cast<AccountId>(i));
  });
}

std::vector<double> FeatureExtractor::extract(AccountId id) const {
  return compute(graph_, id, [&](AccountId other) -> const AccountBase& { return bases_[other]; });
}

}  // namespace sleid::features
