#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "sleid/features/matrix.hpp"
#include "sleid/txgraph/graph.hpp"
#include "sleid/txgraph/record.hpp"

namespace sleid::testing {

inline std::string addr(std::uint64_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "0x%040llx", static_cast<unsigned long long>(i));
  return buf;
}

// Builds a record with a unique hash per call site index.
inline txgraph::TransactionRecord tx(std::uint64_t n, std::uint64_t from, std::uint64_t to, std::int64_t ts,
                                     std::uint64_t block = 0, txgraph::TxKind kind = txgraph::TxKind::kNativeTransfer) {
  txgraph::TransactionRecord r;
  char h[80];
  std::snprintf(h, sizeof h, "0x%064llx", static_cast<unsigned long long>(n));
  r.tx_hash = h;
  r.block_height = block ? block : static_cast<std::uint64_t>(ts);
  r.timestamp = ts;
  r.sender = addr(from);
  r.receiver = addr(to);
  r.native_value = 5;
  r.fee = 21000;
  r.kind = kind;
  if (kind == txgraph::TxKind::kErc20Transfer || kind == txgraph::TxKind::kApprove) r.token_contract = addr(0xC0FFEE);
  return r;
}

// Seed account 1 pays `leaves` accounts (ids 1000+). Each leaf then makes six
// payments to private sinks over 100 days, which makes it low-risk; the sinks
// themselves are not. Account 0xD1 is a registry address nobody touches.
inline std::vector<txgraph::TransactionRecord> seed_with_leaves(std::size_t leaves) {
  std::vector<txgraph::TransactionRecord> out;
  std::uint64_t n = 1;
  const std::int64_t t0 = 1'600'000'000;
  for (std::size_t l = 0; l < leaves; ++l) {
    out.push_back(tx(n++, 1, 1000 + l, t0 + static_cast<std::int64_t>(l)));
    for (int k = 0; k < 6; ++k) {
      out.push_back(tx(n++, 1000 + l, 100000 + l * 10 + k, t0 + 1000 + (k + 1) * 20 * 86400 + static_cast<std::int64_t>(l)));
    }
  }
  return out;
}

inline features::FeatureMatrix matrix(std::size_t rows, std::size_t cols, const std::vector<double>& data) {
  features::FeatureMatrix m;
  for (std::size_t c = 0; c < cols; ++c) m.columns.push_back("c" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) m.rows.push_back(addr(r + 1));
  m.data = data;
  m.missing.assign(data.size(), 0);
  return m;
}

}  // namespace sleid::testing
