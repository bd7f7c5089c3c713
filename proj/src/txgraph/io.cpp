#include "sleid/txgraph/io.hpp"

#include <zlib.h>

#include <map>
#include <sstream>

#include <json.hpp>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/text.hpp"

namespace sleid::txgraph {

namespace {

using nlohmann::json;

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + what);
}

Wei wei_field(const json& j, const char* name, std::size_t line, bool required) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) {
    if (required) line_error(line, std::string("missing field ") + name);
    return 0;
  }
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    const auto v = it->get<std::int64_t>();
    if (v < 0) line_error(line, std::string("negative ") + name);
    return static_cast<Wei>(v);
  }
  if (it->is_string()) {
    auto v = parse_wei(it->get_ref<const std::string&>());
    if (!v) line_error(line, std::string("bad decimal in ") + name);
    return *v;
  }
  line_error(line, std::string("bad type for ") + name);
}

std::string string_field(const json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end() || !it->is_string()) line_error(line, std::string("missing field ") + name);
  return it->get<std::string>();
}

std::int64_t int_field(const json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) line_error(line, std::string("missing field ") + name);
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_string()) {
    try {
      std::size_t used = 0;
      const auto& s = it->get_ref<const std::string&>();
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  line_error(line, std::string("bad integer in ") + name);
}

// Shared field validation for both input formats.
void check_addresses(TransactionRecord& r, std::size_t line) {
  auto s = normalize_address(r.sender);
  if (!s) line_error(line, "malformed sender address '" + r.sender + "'");
  auto t = normalize_address(r.receiver);
  if (!t) line_error(line, "malformed receiver address '" + r.receiver + "'");
  r.sender = *s;
  r.receiver = *t;
  if (r.token_contract) {
    auto c = normalize_address(*r.token_contract);
    if (!c) line_error(line, "malformed token_contract '" + *r.token_contract + "'");
    r.token_contract = *c;
  }
  if ((r.kind == TxKind::kErc20Transfer || r.kind == TxKind::kApprove) && !r.token_contract) {
    line_error(line, "token_contract required for " + std::string(kind_name(r.kind)));
  }
  if (r.block_height > static_cast<std::uint64_t>(INT64_MAX)) line_error(line, "block_height out of range");
}

TxStatus parse_status(std::string_view s, std::size_t line) {
  s = text::trim(s);
  if (s.empty() || s == "success" || s == "ok" || s == "1") return TxStatus::kSuccess;
  if (s == "failed" || s == "fail" || s == "0") return TxStatus::kFailed;
  line_error(line, "bad status '" + std::string(s) + "'");
}

}  // namespace

std::vector<TransactionRecord> parse_jsonl(std::string_view input) {
  std::vector<TransactionRecord> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(input)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(line_no, "expected a JSON object");
    TransactionRecord r;
    r.tx_hash = string_field(j, "tx_hash", line_no);
    if (auto it = j.find("sub_index"); it != j.end()) r.sub_index = static_cast<std::uint32_t>(int_field(j, "sub_index", line_no));
    const auto block = int_field(j, "block_height", line_no);
    if (block < 0) line_error(line_no, "negative block_height");
    r.block_height = static_cast<std::uint64_t>(block);
    r.timestamp = int_field(j, "timestamp", line_no);
    r.sender = string_field(j, "sender", line_no);
    r.receiver = string_field(j, "receiver", line_no);
    r.native_value = wei_field(j, "native_value", line_no, true);
    r.fee = wei_field(j, "fee", line_no, true);
    auto kind = parse_kind(string_field(j, "kind", line_no));
    if (!kind) line_error(line_no, "unknown kind");
    r.kind = *kind;
    if (auto it = j.find("token_contract"); it != j.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
      r.token_contract = it->get<std::string>();
    }
    if (auto it = j.find("method_id"); it != j.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
      auto m = parse_method_id(it->get_ref<const std::string&>());
      if (!m) line_error(line_no, "bad method_id");
      r.method_id = *m;
    }
    r.token_value = wei_field(j, "token_value", line_no, false);
    if (auto it = j.find("status"); it != j.end() && it->is_string()) {
      r.status = parse_status(it->get_ref<const std::string&>(), line_no);
    }
    check_addresses(r, line_no);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TransactionRecord> parse_csv(std::string_view input) {
  std::vector<TransactionRecord> out;
  auto lines = text::split_lines(input);
  if (lines.empty()) fail(ErrorCode::kParseError, "line 1: missing CSV header");
  std::map<std::string, std::size_t, std::less<>> col;
  {
    auto header = text::split(lines[0], ',');
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(text::trim(header[i]))] = i;
  }
  for (const char* required : {"tx_hash", "block_height", "timestamp", "sender", "receiver",
                               "native_value", "fee", "kind"}) {
    if (!col.count(required)) fail(ErrorCode::kParseError, std::string("line 1: header lacks ") + required);
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (text::trim(lines[li]).empty()) continue;
    auto cells = text::split(lines[li], ',');
    auto cell = [&](std::string_view name) -> std::string_view {
      auto it = col.find(name);
      if (it == col.end() || it->second >= cells.size()) return {};
      return text::trim(cells[it->second]);
    };
    auto integer = [&](std::string_view name, bool allow_negative) -> std::int64_t {
      const std::string s(cell(name));
      try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used == s.size() && (allow_negative || v >= 0)) return v;
      } catch (const std::exception&) {
      }
      line_error(line_no, "bad integer in " + std::string(name));
    };
    auto wei = [&](std::string_view name, bool required) -> Wei {
      auto s = cell(name);
      if (s.empty() && !required) return 0;
      auto v = parse_wei(s);
      if (!v) line_error(line_no, "bad decimal in " + std::string(name));
      return *v;
    };
    TransactionRecord r;
    r.tx_hash = std::string(cell("tx_hash"));
    if (r.tx_hash.empty()) line_error(line_no, "empty tx_hash");
    if (!cell("sub_index").empty()) r.sub_index = static_cast<std::uint32_t>(integer("sub_index", false));
    r.block_height = static_cast<std::uint64_t>(integer("block_height", false));
    r.timestamp = integer("timestamp", true);
    r.sender = std::string(cell("sender"));
    r.receiver = std::string(cell("receiver"));
    r.native_value = wei("native_value", true);
    r.fee = wei("fee", true);
    auto kind = parse_kind(cell("kind"));
    if (!kind) line_error(line_no, "unknown kind");
    r.kind = *kind;
    if (!cell("token_contract").empty()) r.token_contract = std::string(cell("token_contract"));
    if (!cell("method_id").empty()) {
      auto m = parse_method_id(cell("method_id"));
      if (!m) line_error(line_no, "bad method_id");
      r.method_id = *m;
    }
    r.token_value = wei("token_value", false);
    r.status = parse_status(cell("status"), line_no);
    check_addresses(r, line_no);
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_maybe_gzip(const std::string& path) {
  if (!ends_with(path, ".gz")) return read_file(path);
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::kIoError, "cannot open " + path);
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool bad = n < 0;
  gzclose(f);
  if (bad) fail(ErrorCode::kIoError, "corrupt gzip stream in " + path);
  return out;
}

std::vector<TransactionRecord> read_records(const std::string& path) {
  std::string base = path;
  if (ends_with(base, ".gz")) base.resize(base.size() - 3);
  const std::string data = read_maybe_gzip(path);
  if (ends_with(base, ".jsonl") || ends_with(base, ".json")) return parse_jsonl(data);
  if (ends_with(base, ".csv")) return parse_csv(data);
  fail(ErrorCode::kParseError, "unrecognised record file extension: " + path);
}

LedgerGraph load_graph(const std::string& path, IngestOptions options, const LabelBook* labels) {
  if (ends_with(path, ".slgraph")) {
    LedgerGraph g = deserialize_graph(read_file(path));
    if (!labels && !options.drop_failed) return g;
    // Re-freeze to attach labels / apply the failure filter.
    GraphBuilder builder(options);
    for (const auto& t : g.txs()) builder.add(t.record);
    return std::move(builder).freeze(labels);
  }
  const auto records = read_records(path);
  return ingest(records, options, labels);
}

std::string to_jsonl(std::span<const TransactionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["tx_hash"] = r.tx_hash;
    if (r.sub_index != 0) j["sub_index"] = r.sub_index;
    j["block_height"] = r.block_height;
    j["timestamp"] = r.timestamp;
    j["sender"] = r.sender;
    j["receiver"] = r.receiver;
    j["native_value"] = format_wei(r.native_value);
    j["fee"] = format_wei(r.fee);
    j["kind"] = std::string(kind_name(r.kind));
    if (r.token_contract) j["token_contract"] = *r.token_contract;
    if (r.method_id) j["method_id"] = format_method_id(*r.method_id);
    if (r.token_value != 0) j["token_value"] = format_wei(r.token_value);
    if (r.status == TxStatus::kFailed) j["status"] = "failed";
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string to_csv(std::span<const TransactionRecord> records) {
  std::ostringstream out;
  out << "tx_hash,sub_index,block_height,timestamp,sender,receiver,native_value,fee,kind,"
         "token_contract,method_id,token_value,status\n";
  for (const auto& r : records) {
    out << r.tx_hash << ',' << r.sub_index << ',' << r.block_height << ',' << r.timestamp << ','
        << r.sender << ',' << r.receiver << ',' << format_wei(r.native_value) << ','
        << format_wei(r.fee) << ',' << kind_name(r.kind) << ',' << r.token_contract.value_or("")
        << ',' << (r.method_id ? format_method_id(*r.method_id) : "") << ','
        << format_wei(r.token_value) << ',' << (r.status == TxStatus::kFailed ? "failed" : "success")
        << '\n';
  }
  return out.str();
}

}  // namespace sleid::txgraph
