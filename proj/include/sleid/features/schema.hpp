#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sleid::features {

inline constexpr std::uint32_t kSchemaVersion = 1;

enum class Category { kGraph, kTemporal, kNode, kTransaction, kVolatility, kNeighborhood };

std::string_view category_name(Category c);

struct FeatureSpec {
  std::string_view name;
  Category category;
};

// The learned feature inventory in canonical order. Names that the inventory
// lists under several categories appear once, under their first category.
std::span<const FeatureSpec> feature_inventory();
std::vector<std::string> canonical_names();
std::optional<std::size_t> canonical_index(std::string_view name);

// Inventory rows kept out of the learned schema; exported as metadata only.
inline constexpr std::string_view kMetadataColumns[] = {"label", "tag"};

// Digest over (version, ordered names); stored in every model that consumes
// a matrix so mismatched inputs are rejected.
std::uint64_t schema_digest(std::span<const std::string> names, std::uint32_t version = kSchemaVersion);

}  // namespace sleid::features
