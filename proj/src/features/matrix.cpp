#include "sleid/features/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>

#include <json.hpp>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/common/text.hpp"
#include "sleid/features/extract.hpp"
#include "sleid/features/schema.hpp"

namespace sleid::features {

namespace {

void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

FeatureMatrix assemble(const txgraph::LedgerGraph& graph, const std::vector<txgraph::AccountId>& ids,
                       int workers) {
  FeatureMatrix m;
  m.schema_version = kSchemaVersion;
  m.columns = canonical_names();
  const std::size_t cols = m.columns.size();
  m.rows.reserve(ids.size());
  for (auto id : ids) m.rows.push_back(graph.account(id).address);
  m.data.assign(ids.size() * cols, 0.0);
  m.missing.assign(ids.size() * cols, 0);
  FeatureExtractor extractor(graph, workers);
  parallel_for(ids.size(), workers, [&](std::size_t r) {
    const auto v = extractor.extract(ids[r]);
    for (std::size_t c = 0; c < cols; ++c) {
      m.data[r * cols + c] = v[c];
      m.missing[r * cols + c] = std::isfinite(v[c]) ? 0 : 1;
    }
  });
  return m;
}

}  // namespace

std::uint64_t FeatureMatrix::digest() const { return schema_digest(columns, schema_version); }

std::size_t FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  fail(ErrorCode::kSchemaError, "no column named " + std::string(name));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.schema_version = schema_version;
  out.columns = columns;
  const std::size_t cols = columns.size();
  out.rows.reserve(indices.size());
  out.data.reserve(indices.size() * cols);
  out.missing.reserve(indices.size() * cols);
  for (auto r : indices) {
    out.rows.push_back(rows.at(r));
    out.data.insert(out.data.end(), data.begin() + r * cols, data.begin() + (r + 1) * cols);
    out.missing.insert(out.missing.end(), missing.begin() + r * cols, missing.begin() + (r + 1) * cols);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_index(n));
  FeatureMatrix out;
  out.schema_version = schema_version;
  out.columns.assign(names.begin(), names.end());
  out.rows = rows;
  out.data.resize(rows.size() * idx.size());
  out.missing.resize(rows.size() * idx.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.data[r * idx.size() + j] = at(r, idx[j]);
      out.missing[r * idx.size() + j] = missing[r * columns.size() + idx[j]];
    }
  }
  return out;
}

bool FeatureMatrix::operator==(const FeatureMatrix& o) const {
  if (schema_version != o.schema_version || columns != o.columns || rows != o.rows ||
      missing != o.missing || data.size() != o.data.size()) {
    return false;
  }
  // Bitwise so that NaN cells compare equal to themselves.
  return std::memcmp(data.data(), o.data.data(), data.size() * sizeof(double)) == 0;
}

FeatureMatrix build_matrix(const txgraph::LedgerGraph& graph, int workers) {
  std::vector<txgraph::AccountId> ids(graph.account_count());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<txgraph::AccountId>(i);
  return assemble(graph, ids, workers);
}

FeatureMatrix build_matrix(const txgraph::LedgerGraph& graph, std::vector<std::string> addresses,
                           int workers) {
  std::vector<txgraph::AccountId> ids;
  ids.reserve(addresses.size());
  for (const auto& a : addresses) ids.push_back(graph.require(a));
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return assemble(graph, ids, workers);
}

Preprocessor fit_preprocessor(const FeatureMatrix& m, double percentile) {
  if (m.n_rows() == 0) fail(ErrorCode::kEmptyInput, "cannot preprocess an empty matrix");
  if (!(percentile > 0.0 && percentile <= 100.0)) fail(ErrorCode::kBadConfig, "percentile must be in (0, 100]");
  Preprocessor p;
  p.percentile = percentile;
  p.input_columns = m.columns;
  const std::size_t rows = m.n_rows();
  std::vector<double> col;
  col.reserve(rows);
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    col.clear();
    for (std::size_t r = 0; r < rows; ++r) {
      const double v = m.at(r, c);
      if (std::isfinite(v)) col.push_back(v);
    }
    if (col.empty()) {
      p.dropped_columns.push_back(m.columns[c]);
      continue;
    }
    const double mean = mean_of(col);
    col.resize(rows, mean);
    std::sort(col.begin(), col.end());
    p.kept_columns.push_back(m.columns[c]);
    p.means.push_back(mean);
    p.clip_upper.push_back(nearest_rank_percentile(col, percentile));
  }
  return p;
}

FeatureMatrix apply_preprocessor(const Preprocessor& p, const FeatureMatrix& m, PreprocessReport* report) {
  if (m.columns != p.input_columns) fail(ErrorCode::kSchemaError, "matrix columns differ from the preprocessor's");
  FeatureMatrix out = m.select_columns(p.kept_columns);
  PreprocessReport rep;
  rep.dropped_columns = p.dropped_columns;
  const std::size_t cols = out.n_cols();
  for (std::size_t r = 0; r < out.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double& v = out.data[r * cols + c];
      if (!std::isfinite(v)) {
        v = p.means[c];
        ++rep.imputed_cells;
      }
      if (v > p.clip_upper[c]) {
        v = p.clip_upper[c];
        ++rep.clipped_cells;
      }
    }
  }
  if (report) *report = std::move(rep);
  return out;
}

FeatureMatrix preprocess(const FeatureMatrix& m, PreprocessReport* report, double percentile) {
  return apply_preprocessor(fit_preprocessor(m, percentile), m, report);
}

std::string to_csv(const FeatureMatrix& m) {
  std::string out = "address";
  for (const auto& c : m.columns) out += ',' + c;
  out += '\n';
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    out += m.rows[r];
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
      out += ',';
      const double v = m.at(r, c);
      if (!std::isnan(v)) format_double(out, v);
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix from_csv(std::string_view input, std::uint32_t schema_version) {
  auto lines = text::split_lines(input);
  if (lines.empty()) fail(ErrorCode::kParseError, "line 1: missing header");
  auto header = text::split(lines[0], ',');
  if (header.empty() || text::trim(header[0]) != "address") fail(ErrorCode::kParseError, "line 1: first column must be address");
  FeatureMatrix m;
  m.schema_version = schema_version;
  for (std::size_t i = 1; i < header.size(); ++i) m.columns.emplace_back(text::trim(header[i]));
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    auto cells = text::split(lines[li], ',');
    if (cells.size() != header.size()) {
      fail(ErrorCode::kParseError, "line " + std::to_string(li + 1) + ": expected " +
                                       std::to_string(header.size()) + " cells");
    }
    m.rows.emplace_back(text::trim(cells[0]));
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const std::string cell(text::trim(cells[i]));
      double v = kMissing;
      if (!cell.empty()) {
        char* end = nullptr;
        v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() + cell.size()) {
          fail(ErrorCode::kParseError, "line " + std::to_string(li + 1) + ": bad number '" + cell + "'");
        }
      }
      m.data.push_back(v);
      m.missing.push_back(std::isfinite(v) ? 0 : 1);
    }
  }
  return m;
}

std::string serialize_matrix(const FeatureMatrix& m) {
  ByteWriter w;
  w.raw(kMatrixMagic);
  w.u32(kMatrixFormatVersion);
  w.u32(m.schema_version);
  w.u64(m.digest());
  w.u64(m.n_rows());
  w.u64(m.n_cols());
  for (const auto& c : m.columns) w.str(c);
  for (const auto& r : m.rows) w.str(r);
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    for (std::size_t r = 0; r < m.n_rows(); ++r) w.f64(m.at(r, c));
  }
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    for (std::size_t r = 0; r < m.n_rows(); ++r) w.u8(m.missing[r * m.n_cols() + c]);
  }
  return w.take();
}

FeatureMatrix deserialize_matrix(std::string_view bytes) {
  ByteReader rd(bytes);
  rd.expect_magic(kMatrixMagic);
  if (rd.u32() != kMatrixFormatVersion) fail(ErrorCode::kFormatError, "unsupported SLFEAT version");
  FeatureMatrix m;
  m.schema_version = rd.u32();
  const std::uint64_t digest = rd.u64();
  const std::uint64_t rows = rd.u64();
  const std::uint64_t cols = rd.u64();
  if (rows * cols * 9 > rd.remaining()) fail(ErrorCode::kFormatError, "SLFEAT container truncated");
  for (std::uint64_t c = 0; c < cols; ++c) m.columns.push_back(rd.str());
  for (std::uint64_t r = 0; r < rows; ++r) m.rows.push_back(rd.str());
  m.data.resize(rows * cols);
  m.missing.resize(rows * cols);
  for (std::uint64_t c = 0; c < cols; ++c) {
    for (std::uint64_t r = 0; r < rows; ++r) m.data[r * cols + c] = rd.f64();
  }
  for (std::uint64_t c = 0; c < cols; ++c) {
    for (std::uint64_t r = 0; r < rows; ++r) m.missing[r * cols + c] = rd.u8();
  }
  if (!rd.at_end()) fail(ErrorCode::kFormatError, "trailing bytes in SLFEAT container");
  if (m.digest() != digest) fail(ErrorCode::kFormatError, "SLFEAT schema digest mismatch");
  return m;
}

std::string schema_manifest(const FeatureMatrix& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = m.schema_version;
  j["digest"] = hex64(m.digest());
  j["columns"] = m.columns;
  std::vector<std::string> meta;
  for (auto s : kMetadataColumns) meta.emplace_back(s);
  j["metadata_columns"] = meta;
  return j.dump(2) + "\n";
}

std::string serialize_preprocessor(const Preprocessor& p) {
  ByteWriter w;
  w.raw("SLPREP\x01");
  w.f64(p.percentile);
  auto strings = [&](const std::vector<std::string>& v) {
    w.u64(v.size());
    for (const auto& s : v) w.str(s);
  };
  strings(p.input_columns);
  strings(p.kept_columns);
  strings(p.dropped_columns);
  for (double v : p.means) w.f64(v);
  for (double v : p.clip_upper) w.f64(v);
  return w.take();
}

Preprocessor deserialize_preprocessor(std::string_view bytes) {
  ByteReader rd(bytes);
  rd.expect_magic(std::string_view("SLPREP\x01", 7));
  Preprocessor p;
  p.percentile = rd.f64();
  auto strings = [&](std::vector<std::string>& v) {
    const auto n = rd.u64();
    if (n > rd.remaining()) fail(ErrorCode::kFormatError, "preprocessor container truncated");
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(rd.str());
  };
  strings(p.input_columns);
  strings(p.kept_columns);
  strings(p.dropped_columns);
  for (std::size_t i = 0; i < p.kept_columns.size(); ++i) p.means.push_back(rd.f64());
  for (std::size_t i = 0; i < p.kept_columns.size(); ++i) p.clip_upper.push_back(rd.f64());
  if (!rd.at_end()) fail(ErrorCode::kFormatError, "trailing bytes in preprocessor container");
  return p;
}

}  // namespace sleid::features
