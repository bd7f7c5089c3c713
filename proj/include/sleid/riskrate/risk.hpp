#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sleid/txgraph/graph.hpp"

namespace sleid::riskrate {

// How the three criteria are combined into the normal/not-normal decision.
//   all_criteria:   every score below the threshold
//   aggregate_max:  max(score) below the threshold (same decision, kept for
//                   configs that name the aggregate form)
//   aggregate_mean: mean(score) below the threshold
enum class AggregateMode { kAllCriteria, kAggregateMax, kAggregateMean };

std::string_view aggregate_mode_name(AggregateMode mode);
AggregateMode parse_aggregate_mode(std::string_view name);  // throws kBadConfig

struct RiskParams {
  double anonymity_decay = 1.0;               // k in 1 / (1 + k (n - 1))
  std::int64_t wash_window_seconds = 86400;
  double lifespan_decay_days = 30.0;
  double threshold = 0.2;
  AggregateMode mode = AggregateMode::kAllCriteria;
};

struct RiskProfile {
  double anonymity = 0.0;
  double wash_trading = 0.0;
  double lifespan = 0.0;
  bool is_normal = false;
  bool defi_involved = false;

  bool operator==(const RiskProfile&) const = default;
};

class DefiRegistry {
 public:
  DefiRegistry() = default;
  explicit DefiRegistry(const std::vector<std::string>& addresses);

  bool contains(std::string_view address) const;
  bool empty() const { return set_.empty(); }
  std::size_t size() const { return set_.size(); }
  // Sorted address list.
  std::vector<std::string> addresses() const;

 private:
  std::unordered_set<std::string> set_;
};

// Newline-delimited addresses; '#' starts a comment. Malformed lines raise
// kParseError with the line number.
DefiRegistry parse_registry(std::string_view text);
DefiRegistry read_registry(const std::string& path);
std::string format_registry(const DefiRegistry& registry);

double anonymity_score(const txgraph::AccountNode& account, const RiskParams& params = {});
double wash_trading_score(const txgraph::LedgerGraph& graph, std::string_view address,
                          const RiskParams& params = {});
double wash_trading_score(const txgraph::LedgerGraph& graph, txgraph::AccountId id,
                          const RiskParams& params = {});
// Requires first_seen <= last_seen <= now (kBadConfig otherwise).
double lifespan_score(const txgraph::AccountNode& account, std::int64_t now,
                      const RiskParams& params = {});
// Requires a non-empty registry (kBadConfig otherwise).
bool is_defi_involved(const txgraph::LedgerGraph& graph, std::string_view address,
                      const DefiRegistry& registry);
bool is_defi_involved(const txgraph::LedgerGraph& graph, txgraph::AccountId id,
                      const DefiRegistry& registry);

bool classify_normal(double anonymity, double wash_trading, double lifespan,
                     const RiskParams& params = {});

// `now` defaults to the latest timestamp in the graph.
RiskProfile risk_profile(const txgraph::LedgerGraph& graph, std::string_view address,
                         const DefiRegistry& registry, const RiskParams& params = {});
RiskProfile risk_profile(const txgraph::LedgerGraph& graph, txgraph::AccountId id,
                         const DefiRegistry& registry, const RiskParams& params = {});

// One profile per account in graph order.
std::vector<RiskProfile> score_all(const txgraph::LedgerGraph& graph, const DefiRegistry& registry,
                                   const RiskParams& params = {}, int workers = 0);

// address,anonymity,wash_trading,lifespan,is_normal,defi_involved
std::string format_risk_csv(const txgraph::LedgerGraph& graph,
                            const std::vector<RiskProfile>& profiles);

}  // namespace sleid::riskrate
