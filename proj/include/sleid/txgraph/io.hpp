#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sleid/txgraph/graph.hpp"
#include "sleid/txgraph/record.hpp"

namespace sleid::txgraph {

// Parse errors carry the 1-based line number of the offending line.
std::vector<TransactionRecord> parse_jsonl(std::string_view text);
std::vector<TransactionRecord> parse_csv(std::string_view text);

// Chooses the parser by extension: .jsonl / .csv, optionally with .gz.
std::vector<TransactionRecord> read_records(const std::string& path);

// Reads a record file or an SLGRAPH container and freezes it.
LedgerGraph load_graph(const std::string& path, IngestOptions options = {},
                       const LabelBook* labels = nullptr);

std::string to_jsonl(std::span<const TransactionRecord> records);
std::string to_csv(std::span<const TransactionRecord> records);

// Whole-file read with transparent gzip decompression for *.gz paths.
std::string read_maybe_gzip(const std::string& path);

}  // namespace sleid::txgraph
