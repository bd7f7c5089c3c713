#include "sleid/features/schema.hpp"

#include <array>

#include "sleid/common/stats.hpp"

namespace sleid::features {

namespace {

using C = Category;

constexpr std::array<FeatureSpec, 97> kInventory{{
    {"in_degree", C::kGraph},
    {"out_degree", C::kGraph},
    {"total_degree", C::kGraph},
    {"neighbors", C::kGraph},
    {"in_degree_mean", C::kGraph},
    {"in_degree_max", C::kGraph},
    {"in_degree_min", C::kGraph},
    {"in_degree_median", C::kGraph},
    {"in_degree_std", C::kGraph},
    {"out_degree_mean", C::kGraph},
    {"out_degree_max", C::kGraph},
    {"out_degree_min", C::kGraph},
    {"out_degree_median", C::kGraph},
    {"out_degree_std", C::kGraph},
    {"total_degree_mean", C::kGraph},
    {"total_degree_max", C::kGraph},
    {"total_degree_min", C::kGraph},
    {"total_degree_median", C::kGraph},
    {"total_degree_std", C::kGraph},
    {"tx_per_neighbor_mean", C::kGraph},
    {"tx_per_neighbor_min", C::kGraph},
    {"tx_per_neighbor_max", C::kGraph},
    {"tx_per_neighbor_median", C::kGraph},
    {"tx_per_neighbor_std", C::kGraph},
    {"multi_transacted_neighbors", C::kGraph},

    {"n_blocks", C::kTemporal},
    {"min_block", C::kTemporal},
    {"max_block", C::kTemporal},
    {"block_height_first_sent_in", C::kTemporal},
    {"block_height_first_received_in", C::kTemporal},
    {"block_height_last_sent_in", C::kTemporal},
    {"block_height_last_received_in", C::kTemporal},
    {"transacted_first", C::kTemporal},
    {"transacted_last", C::kTemporal},
    {"Age", C::kTemporal},
    {"tx_per_block_mean", C::kTemporal},
    {"tx_per_block_max", C::kTemporal},
    {"consistency", C::kTemporal},
    {"burst", C::kTemporal},

    {"n_tx", C::kNode},
    {"n_tx_out", C::kNode},
    {"n_tx_in", C::kNode},
    {"n_tx_total", C::kNode},
    {"self_tx_count", C::kNode},
    {"n_tokens", C::kNode},
    {"n_method", C::kNode},

    {"n_transfers", C::kTransaction},
    {"n_ERC", C::kTransaction},
    {"n_approve", C::kTransaction},
    {"mean_tx_fee", C::kTransaction},
    {"median_tx_fee", C::kTransaction},
    {"max_tx_fee", C::kTransaction},
    {"min_tx_fee", C::kTransaction},
    {"std_tx_fee", C::kTransaction},
    {"mean_erc_fee", C::kTransaction},
    {"median_erc_fee", C::kTransaction},
    {"max_erc_fee", C::kTransaction},
    {"min_erc_fee", C::kTransaction},
    {"std_erc_fee", C::kTransaction},
    {"mean_out_value_transfer", C::kTransaction},
    {"median_out_value_transfer", C::kTransaction},
    {"mean_in_value_transfers", C::kTransaction},
    {"median_in_value_transfers", C::kTransaction},
    {"sum_out_value_transfer", C::kTransaction},
    {"sum_in_value_transfer", C::kTransaction},
    {"std_out_value_transfer", C::kTransaction},
    {"std_in_value_transfer", C::kTransaction},
    {"sum_out_value_ERC", C::kTransaction},
    {"sum_in_value_ERC", C::kTransaction},
    {"mean_in_value_ERC", C::kTransaction},
    {"mean_out_value_ERC", C::kTransaction},
    {"median_in_value_ERC", C::kTransaction},
    {"median_out_value_ERC", C::kTransaction},
    {"std_out_value_ERC", C::kTransaction},
    {"std_in_value_ERC", C::kTransaction},

    {"burst_tx_fee", C::kVolatility},
    {"burst_erc_fee", C::kVolatility},

    {"mean_tx_fee_neighbor_mean", C::kNeighborhood},
    {"mean_tx_fee_neighbor_max", C::kNeighborhood},
    {"mean_tx_fee_neighbor_min", C::kNeighborhood},
    {"mean_tx_fee_neighbor_median", C::kNeighborhood},
    {"mean_tx_fee_neighbor_std", C::kNeighborhood},
    {"max_tx_fee_neighbor_mean", C::kNeighborhood},
    {"max_tx_fee_neighbor_max", C::kNeighborhood},
    {"max_tx_fee_neighbor_min", C::kNeighborhood},
    {"max_tx_fee_neighbor_median", C::kNeighborhood},
    {"max_tx_fee_neighbor_std", C::kNeighborhood},
    {"mean_erc_fee_neighbor_mean", C::kNeighborhood},
    {"mean_erc_fee_neighbor_max", C::kNeighborhood},
    {"mean_erc_fee_neighbor_min", C::kNeighborhood},
    {"mean_erc_fee_neighbor_median", C::kNeighborhood},
    {"mean_erc_fee_neighbor_std", C::kNeighborhood},
    {"max_erc_fee_neighbor_mean", C::kNeighborhood},
    {"max_erc_fee_neighbor_max", C::kNeighborhood},
    {"max_erc_fee_neighbor_min", C::kNeighborhood},
    {"max_erc_fee_neighbor_median", C::kNeighborhood},
    {"max_erc_fee_neighbor_std", C::kNeighborhood},
}};

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case C::kGraph: return "graph";
    case C::kTemporal: return "temporal";
    case C::kNode: return "node";
    case C::kTransaction: return "transaction";
    case C::kVolatility: return "volatility";
    case C::kNeighborhood: return "neighborhood";
  }
  return "?";
}

std::span<const FeatureSpec> feature_inventory() { return kInventory; }

std::vector<std::string> canonical_names() {
  std::vector<std::string> out;
  out.reserve(kInventory.size());
  for (const auto& f : kInventory) out.emplace_back(f.name);
  return out;
}

std::optional<std::size_t> canonical_index(std::string_view name) {
  for (std::size_t i = 0; i < kInventory.size(); ++i) {
    if (kInventory[i].name == name) return i;
  }
  return std::nullopt;
}

std::uint64_t schema_digest(std::span<const std::string> names, std::uint32_t version) {
  std::uint64_t h = fnv1a64("v" + std::to_string(version));
  for (const auto& n : names) {
    h = fnv1a64(n, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

}  // namespace sleid::features
