#include "sleid/riskrate/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/text.hpp"

namespace sleid::riskrate {

using txgraph::AccountId;
using txgraph::LedgerGraph;

std::string_view aggregate_mode_name(AggregateMode mode) {
  switch (mode) {
    case AggregateMode::kAllCriteria: return "all_criteria";
    case AggregateMode::kAggregateMax: return "aggregate_max";
    case AggregateMode::kAggregateMean: return "aggregate_mean";
  }
  return "?";
}

AggregateMode parse_aggregate_mode(std::string_view name) {
  for (auto m : {AggregateMode::kAllCriteria, AggregateMode::kAggregateMax,
                 AggregateMode::kAggregateMean}) {
    if (aggregate_mode_name(m) == name) return m;
  }
  fail(ErrorCode::kBadConfig, "unknown risk aggregate mode: " + std::string(name));
}

DefiRegistry::DefiRegistry(const std::vector<std::string>& addresses) {
  for (const auto& a : addresses) {
    auto norm = txgraph::normalize_address(a);
    if (!norm) fail(ErrorCode::kParseError, "malformed registry address: " + a);
    set_.insert(*norm);
  }
}

bool DefiRegistry::contains(std::string_view address) const {
  return set_.count(std::string(address)) > 0;
}

std::vector<std::string> DefiRegistry::addresses() const {
  std::vector<std::string> out(set_.begin(), set_.end());
  std::sort(out.begin(), out.end());
  return out;
}

DefiRegistry parse_registry(std::string_view input) {
  std::vector<std::string> addresses;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(input)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    auto norm = txgraph::normalize_address(line);
    if (!norm) {
      fail(ErrorCode::kParseError,
           "line " + std::to_string(line_no) + ": malformed registry address '" + std::string(line) + "'");
    }
    addresses.push_back(*norm);
  }
  return DefiRegistry(addresses);
}

DefiRegistry read_registry(const std::string& path) { return parse_registry(read_file(path)); }

std::string format_registry(const DefiRegistry& registry) {
  std::string out;
  for (const auto& a : registry.addresses()) out += a + '\n';
  return out;
}

double anonymity_score(const txgraph::AccountNode& account, const RiskParams& params) {
  const double n = std::max<double>(1.0, account.n_tx_total);
  return 1.0 / (1.0 + params.anonymity_decay * (n - 1.0));
}

double wash_trading_score(const LedgerGraph& graph, AccountId id, const RiskParams& params) {
  const auto& acc = graph.account(id);
  if (acc.n_tx_total == 0) return 0.0;
  // (counterparty, outgoing?, timestamp) for every non-self transaction.
  struct Event {
    AccountId other;
    bool outgoing;
    std::int64_t ts;
  };
  std::vector<Event> events;
  std::size_t matched = 0;
  for (auto tid : graph.incident(id)) {
    const auto& t = graph.tx(tid);
    if (t.is_self()) {
      ++matched;
      continue;
    }
    const bool out = t.sender == id;
    events.push_back({out ? t.receiver : t.sender, out, t.record.timestamp});
  }
  auto key = [](const Event& e) { return std::tie(e.other, e.outgoing, e.ts); };
  std::sort(events.begin(), events.end(), [&](const Event& a, const Event& b) { return key(a) < key(b); });
  const std::int64_t window = params.wash_window_seconds;
  for (const auto& e : events) {
    const Event lo{e.other, !e.outgoing, e.ts - window};
    auto it = std::lower_bound(events.begin(), events.end(), lo,
                               [&](const Event& a, const Event& b) { return key(a) < key(b); });
    if (it != events.end() && it->other == e.other && it->outgoing != e.outgoing &&
        it->ts <= e.ts + window) {
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(acc.n_tx_total);
}

double wash_trading_score(const LedgerGraph& graph, std::string_view address, const RiskParams& params) {
  return wash_trading_score(graph, graph.require(address), params);
}

double lifespan_score(const txgraph::AccountNode& account, std::int64_t now, const RiskParams& params) {
  if (account.first_seen > account.last_seen || account.last_seen > now) {
    fail(ErrorCode::kBadConfig, "lifespan requires first_seen <= last_seen <= now for " + account.address);
  }
  const double span_days = static_cast<double>(account.last_seen - account.first_seen) / 86400.0;
  return std::exp(-span_days / params.lifespan_decay_days);
}

bool is_defi_involved(const LedgerGraph& graph, AccountId id, const DefiRegistry& registry) {
  if (registry.empty()) fail(ErrorCode::kBadConfig, "DeFi registry is empty");
  for (auto tid : graph.incident(id)) {
    const auto& t = graph.tx(tid);
    const AccountId other = t.sender == id ? t.receiver : t.sender;
    if (registry.contains(graph.account(other).address)) return true;
    if (t.record.token_contract && registry.contains(*t.record.token_contract)) return true;
  }
  return false;
}

bool is_defi_involved(const LedgerGraph& graph, std::string_view address, const DefiRegistry& registry) {
  return is_defi_involved(graph, graph.require(address), registry);
}

bool classify_normal(double anonymity, double wash_trading, double lifespan, const RiskParams& params) {
  const double t = params.threshold;
  switch (params.mode) {
    case AggregateMode::kAllCriteria:
      return anonymity < t && wash_trading < t && lifespan < t;
    case AggregateMode::kAggregateMax:
      return std::max({anonymity, wash_trading, lifespan}) < t;
    case AggregateMode::kAggregateMean:
      return (anonymity + wash_trading + lifespan) / 3.0 < t;
  }
  return false;
}

RiskProfile risk_profile(const LedgerGraph& graph, AccountId id, const DefiRegistry& registry,
                         const RiskParams& params) {
  const auto& acc = graph.account(id);
  RiskProfile p;
  p.anonymity = anonymity_score(acc, params);
  p.wash_trading = wash_trading_score(graph, id, params);
  p.lifespan = lifespan_score(acc, graph.max_timestamp(), params);
  p.is_normal = classify_normal(p.anonymity, p.wash_trading, p.lifespan, params);
  p.defi_involved = is_defi_involved(graph, id, registry);
  return p;
}

RiskProfile risk_profile(const LedgerGraph& graph, std::string_view address,
                         const DefiRegistry& registry, const RiskParams& params) {
  return risk_profile(graph, graph.require(address), registry, params);
}

std::vector<RiskProfile> score_all(const LedgerGraph& graph, const DefiRegistry& registry,
                                   const RiskParams& params, int workers) {
  if (registry.empty()) fail(ErrorCode::kBadConfig, "DeFi registry is empty");
  std::vector<RiskProfile> out(graph.account_count());
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = risk_profile(graph, static_cast<AccountId>(i), registry, params);
  });
  return out;
}

std::string format_risk_csv(const LedgerGraph& graph, const std::vector<RiskProfile>& profiles) {
  std::string out = "address,anonymity,wash_trading,lifespan,is_normal,defi_involved\n";
  char buf[128];
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%d,%d\n", p.anonymity, p.wash_trading,
                  p.lifespan, p.is_normal ? 1 : 0, p.defi_involved ? 1 : 0);
    out += graph.account(static_cast<AccountId>(i)).address;
    out += buf;
  }
  return out;
}

}  // namespace sleid::riskrate
