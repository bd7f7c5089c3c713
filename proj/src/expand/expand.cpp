#include "sleid/expand/expand.hpp"

#include <algorithm>
#include <set>

#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"

namespace sleid::expand {

using txgraph::AccountId;
using txgraph::Label;

std::string_view reason_name(AdmissionReason reason) {
  switch (reason) {
    case AdmissionReason::kSeed: return "seed";
    case AdmissionReason::kLowRisk: return "low_risk";
    case AdmissionReason::kDefi: return "defi";
  }
  return "?";
}

std::string_view status_name(ExpansionStatus status) {
  switch (status) {
    case ExpansionStatus::kConverged: return "converged";
    case ExpansionStatus::kExhaustedFrontier: return "exhausted_frontier";
    case ExpansionStatus::kMaxLayers: return "max_layers";
  }
  return "?";
}

bool ExpansionState::contains(std::string_view address) const {
  auto it = std::lower_bound(core.begin(), core.end(), address,
                             [](const CoreEntry& e, std::string_view a) { return e.address < a; });
  return it != core.end() && it->address == address;
}

ExpansionState expand_dataset(const txgraph::LedgerGraph& graph, const std::vector<std::string>& seeds,
                              const riskrate::DefiRegistry& registry, const ExpandParams& params,
                              const txgraph::LabelBook* labels) {
  if (seeds.empty()) fail(ErrorCode::kBadConfig, "expansion needs at least one seed");
  if (params.max_layers < 0) fail(ErrorCode::kBadConfig, "max_layers must be non-negative");
  if (!(params.ratio_threshold >= 0.0 && params.ratio_threshold <= 1.0)) {
    fail(ErrorCode::kBadConfig, "ratio_threshold must lie in [0, 1]");
  }
  if (registry.empty()) fail(ErrorCode::kBadConfig, "DeFi registry is empty");

  std::set<AccountId> seed_ids;
  for (const auto& s : seeds) seed_ids.insert(graph.require(s));
  if (labels) {
    for (const auto& [address, state] : *labels) {
      if (state.label() != Label::kIllicit) continue;
      auto id = graph.find(address);
      if (id && !seed_ids.count(*id)) {
        fail(ErrorCode::kBadConfig, "illicit label for non-seed address " + address);
      }
    }
  }

  const std::size_t n = graph.account_count();
  std::vector<char> seen(n, 0);
  std::vector<int> layer_of(n, -1);
  std::vector<AdmissionReason> reason_of(n, AdmissionReason::kSeed);
  std::vector<AccountId> previous(seed_ids.begin(), seed_ids.end());
  for (auto id : previous) {
    seen[id] = 1;
    layer_of[id] = 0;
  }

  ExpansionState state;
  state.illicit_count = seed_ids.size();
  std::size_t core_size = seed_ids.size();
  auto ratio_ok = [&] {
    return static_cast<double>(state.illicit_count) / static_cast<double>(core_size) <=
           params.ratio_threshold;
  };

  state.status = ExpansionStatus::kConverged;
  while (!ratio_ok()) {
    if (state.layer_index >= params.max_layers) {
      state.status = ExpansionStatus::kMaxLayers;
      break;
    }
    std::vector<AccountId> frontier;
    for (auto id : previous) {
      for (const auto& cp : graph.counterparties(id)) {
        if (!seen[cp.other]) {
          seen[cp.other] = 1;
          frontier.push_back(cp.other);
        }
      }
    }
    if (frontier.empty()) {
      state.status = ExpansionStatus::kExhaustedFrontier;
      break;
    }
    // Account ids follow lexicographic address order.
    std::sort(frontier.begin(), frontier.end());

    std::vector<riskrate::RiskProfile> profiles(frontier.size());
    parallel_for(frontier.size(), params.workers, [&](std::size_t i) {
      profiles[i] = riskrate::risk_profile(graph, frontier[i], registry, params.risk);
    });

    ++state.layer_index;
    LayerCounts counts;
    counts.evaluated = frontier.size();
    std::vector<AccountId> admitted;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const auto& p = profiles[i];
      if (!p.is_normal && !p.defi_involved) continue;
      const AccountId id = frontier[i];
      reason_of[id] = p.is_normal ? AdmissionReason::kLowRisk : AdmissionReason::kDefi;
      (p.is_normal ? counts.low_risk : counts.defi)++;
      layer_of[id] = state.layer_index;
      admitted.push_back(id);
    }
    core_size += admitted.size();
    state.admitted_per_layer.push_back(counts);
    previous = std::move(admitted);
  }

  for (AccountId id = 0; id < n; ++id) {
    if (layer_of[id] < 0) continue;
    CoreEntry e;
    e.address = graph.account(id).address;
    e.layer = layer_of[id];
    e.reason = reason_of[id];
    if (e.layer == 0) {
      e.label = Label::kIllicit;
    } else if (labels) {
      auto it = labels->find(e.address);
      if (it != labels->end() && it->second.is_known_class()) e.label = it->second.label();
    }
    state.core.push_back(std::move(e));
  }
  return state;
}

std::string format_core_csv(const ExpansionState& state) {
  std::string out = "address,label,layer,reason\n";
  for (const auto& e : state.core) {
    out += e.address;
    out += ',';
    out += txgraph::label_name(e.label);
    out += ',';
    out += std::to_string(e.layer);
    out += ',';
    out += reason_name(e.reason);
    out += '\n';
  }
  return out;
}

}  // namespace sleid::expand
