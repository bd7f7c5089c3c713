#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sleid/txgraph/graph.hpp"

namespace sleid::features {

struct FeatureVector {
  std::uint32_t schema_version = 0;
  // Canonical order; undefined entries are kMissing (NaN).
  std::vector<double> values;
};

// Per-account quantities that neighbours' aggregates are built from.
struct AccountBase {
  double in_degree = 0.0;
  double out_degree = 0.0;
  double total_degree = 0.0;
  double mean_tx_fee = 0.0;
  double max_tx_fee = 0.0;
  double mean_erc_fee = 0.0;  // missing without token events
  double max_erc_fee = 0.0;   // missing without token events
};

AccountBase account_base(const txgraph::LedgerGraph& graph, txgraph::AccountId id);

// Computes the full canonical vector for one account. Throws kNotFound.
FeatureVector extract_features(const txgraph::LedgerGraph& graph, std::string_view address);

// Batch extractor: precomputes every account's base once.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const txgraph::LedgerGraph& graph, int workers = 0);

  std::vector<double> extract(txgraph::AccountId id) const;

 private:
  const txgraph::LedgerGraph& graph_;
  std::vector<AccountBase> bases_;
};

// Window used by the burst family.
inline constexpr std::int64_t kBurstWindowSeconds = 3600;

}  // namespace sleid::features
