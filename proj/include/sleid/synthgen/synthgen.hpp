#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/riskrate/risk.hpp"
#include "sleid/txgraph/labels.hpp"
#include "sleid/txgraph/record.hpp"

namespace sleid::synthgen {

enum class Archetype : std::uint8_t {
  // illicit
  kPhishingFanIn,
  kWashTradeLoop,
  kFlashBurst,
  // licit
  kRegular,
  kDefiHeavy,
  kCasual,
  kBot,
  kCollector,
  kMarketMaker,
  kExchange,
  kDefiContract,
};

std::string_view archetype_name(Archetype a);
bool is_illicit(Archetype a);

struct ArchetypeMix {
  double phishing_fan_in = 0.4;
  double wash_trade_loop = 0.3;
  double flash_burst = 0.3;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t n_accounts = 2000;
  double illicit_fraction = 0.01;
  ArchetypeMix mix;
  std::size_t defi_registry_size = 12;
  int horizon_days = 365;

  // Licit population: shares of the licit externally owned accounts.
  std::size_t n_exchanges = 6;
  double defi_heavy_fraction = 0.15;
  double casual_fraction = 0.35;
  double bot_fraction = 0.02;
  double collector_fraction = 0.03;
  double market_maker_fraction = 0.0;

  // Archetype signal strength.
  int fan_in_min = 5;
  int fan_in_max = 30;
  int cluster_min = 2;
  int cluster_max = 5;
  double phishing_span_days_max = 12.0;
  int loop_min = 2;
  int loop_max = 4;
  int wash_cycles_min = 3;
  int wash_cycles_max = 15;
  int burst_tx_min = 6;
  int burst_tx_max = 40;
  std::int64_t burst_window_seconds = 3600;
  // 0 gives textbook archetypes; 1 lets every illicit account blend in with
  // licit-looking activity and longer, slower variants of its pattern.
  double stealth = 0.5;

  // Share of each class whose label is published in the observed label file.
  double reveal_illicit = 0.5;
  double reveal_licit = 0.2;
  // Illicit accounts are published with weight exp(-reveal_bias * stealth).
  double reveal_bias = 0.0;

  // Errors: n_accounts < 100, fractions outside [0, 1], mix not summing to 1,
  // empty ranges, or a population that does not fit -> kBadConfig.
  void validate() const;
};

struct TruthEntry {
  std::string address;
  int label = 0;
  Archetype archetype = Archetype::kRegular;
  double stealth = 0.0;  // illicit accounts only
};

struct Scenario {
  std::vector<txgraph::TransactionRecord> records;  // ordered by timestamp
  std::vector<TruthEntry> truth;                     // sorted by address
  txgraph::LabelBook observed;                       // published labels only
  riskrate::DefiRegistry registry;

  // Observed illicit addresses, sorted.
  std::vector<std::string> seeds() const;
};

Scenario generate(const ScenarioConfig& config);

// Writes records.jsonl (or records.csv), labels.csv, truth.csv, registry.txt.
void write_scenario(const Scenario& s, const std::string& dir, bool csv = false);

std::string format_truth_csv(const Scenario& s);
// address,label,archetype[,stealth]
std::vector<TruthEntry> parse_truth_csv(std::string_view text);

}  // namespace sleid::synthgen
