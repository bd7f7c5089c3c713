#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/riskrate/risk.hpp"
#include "sleid/txgraph/graph.hpp"

namespace sleid::expand {

enum class AdmissionReason { kSeed, kLowRisk, kDefi };
enum class ExpansionStatus { kConverged, kExhaustedFrontier, kMaxLayers };

std::string_view reason_name(AdmissionReason reason);
std::string_view status_name(ExpansionStatus status);

struct CoreEntry {
  std::string address;
  txgraph::Label label = txgraph::Label::kUnknown;
  int layer = 0;
  AdmissionReason reason = AdmissionReason::kSeed;

  bool operator==(const CoreEntry&) const = default;
};

struct LayerCounts {
  std::size_t evaluated = 0;
  std::size_t low_risk = 0;
  std::size_t defi = 0;

  std::size_t admitted() const { return low_risk + defi; }
  bool operator==(const LayerCounts&) const = default;
};

struct ExpansionState {
  // Sorted by address.
  std::vector<CoreEntry> core;
  std::size_t illicit_count = 0;
  int layer_index = 0;
  // Entry i describes layer i + 1.
  std::vector<LayerCounts> admitted_per_layer;
  ExpansionStatus status = ExpansionStatus::kConverged;

  double illicit_ratio() const {
    return core.empty() ? 0.0 : static_cast<double>(illicit_count) / static_cast<double>(core.size());
  }
  bool contains(std::string_view address) const;
};

struct ExpandParams {
  double ratio_threshold = 0.01;
  riskrate::RiskParams risk;  // risk.threshold is the admission threshold
  int max_layers = 10;
  int workers = 0;
};

// Grows the core layer by layer from the illicit seeds. A candidate is
// admitted when its risk profile is normal or it touches the DeFi registry.
// Candidates take their label from `labels` when present, unknown otherwise.
// Errors: empty seeds / bad params -> kBadConfig; seed not in graph -> kNotFound.
// Frontier exhaustion and the layer cap are reported through `status`.
ExpansionState expand_dataset(const txgraph::LedgerGraph& graph,
                              const std::vector<std::string>& seeds,
                              const riskrate::DefiRegistry& registry,
                              const ExpandParams& params = {},
                              const txgraph::LabelBook* labels = nullptr);

// address,label,layer,reason
std::string format_core_csv(const ExpansionState& state);

}  // namespace sleid::expand
