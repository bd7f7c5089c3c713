#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/txgraph/graph.hpp"

namespace sleid::features {

// Row-major dense matrix with named columns and address-keyed rows.
struct FeatureMatrix {
  std::uint32_t schema_version = 0;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<double> data;
  // 1 where the cell was missing or non-finite at extraction time.
  std::vector<std::uint8_t> missing;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return data[r * columns.size() + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * columns.size(), columns.size()};
  }

  std::uint64_t digest() const;
  std::size_t column_index(std::string_view name) const;  // throws kSchemaError

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  // Keeps the given columns in the given order. Throws kSchemaError.
  FeatureMatrix select_columns(std::span<const std::string> names) const;

  bool operator==(const FeatureMatrix&) const;
};

// Rows in lexicographic address order (the graph's account order), optionally
// restricted to `addresses`, which are sorted and deduplicated first.
FeatureMatrix build_matrix(const txgraph::LedgerGraph& graph, int workers = 0);
FeatureMatrix build_matrix(const txgraph::LedgerGraph& graph, std::vector<std::string> addresses,
                           int workers = 0);

// Learned preprocessing state, reusable on other matrices with the same columns.
struct Preprocessor {
  std::vector<std::string> input_columns;
  std::vector<std::string> kept_columns;
  std::vector<std::string> dropped_columns;  // entirely missing at fit time
  std::vector<double> means;                 // per kept column
  std::vector<double> clip_upper;            // per kept column
  double percentile = 99.0;
};

struct PreprocessReport {
  std::vector<std::string> dropped_columns;
  std::size_t imputed_cells = 0;
  std::size_t clipped_cells = 0;
};

// Non-finite -> missing; means over observed values; nearest-rank percentile
// of the imputed column as upper clip. Throws kEmptyInput on zero rows.
Preprocessor fit_preprocessor(const FeatureMatrix& m, double percentile = 99.0);
FeatureMatrix apply_preprocessor(const Preprocessor& p, const FeatureMatrix& m,
                                 PreprocessReport* report = nullptr);
FeatureMatrix preprocess(const FeatureMatrix& m, PreprocessReport* report = nullptr,
                         double percentile = 99.0);

// CSV: header "address,<columns>", missing cells left empty.
std::string to_csv(const FeatureMatrix& m);
FeatureMatrix from_csv(std::string_view text, std::uint32_t schema_version);

// Columnar SLFEAT container.
std::string serialize_matrix(const FeatureMatrix& m);
FeatureMatrix deserialize_matrix(std::string_view bytes);

// JSON manifest: schema version, digest, columns, metadata columns.
std::string schema_manifest(const FeatureMatrix& m);

std::string serialize_preprocessor(const Preprocessor& p);
Preprocessor deserialize_preprocessor(std::string_view bytes);

inline constexpr std::string_view kMatrixMagic{"SLFEAT\x01", 7};
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

}  // namespace sleid::features
