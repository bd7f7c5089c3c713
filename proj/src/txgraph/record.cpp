#include "sleid/txgraph/record.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace sleid::txgraph {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view kind_name(TxKind kind) {
  switch (kind) {
    case TxKind::kNativeTransfer: return "native_transfer";
    case TxKind::kErc20Transfer: return "erc20_transfer";
    case TxKind::kApprove: return "approve";
    case TxKind::kContractCall: return "contract_call";
  }
  return "native_transfer";
}

std::optional<TxKind> parse_kind(std::string_view text) {
  text = trim(text);
  if (text == "native_transfer") return TxKind::kNativeTransfer;
  if (text == "erc20_transfer") return TxKind::kErc20Transfer;
  if (text == "approve") return TxKind::kApprove;
  if (text == "contract_call") return TxKind::kContractCall;
  return std::nullopt;
}

std::optional<std::string> normalize_address(std::string_view text) {
  text = trim(text);
  if (text.size() != 42 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    return std::nullopt;
  }
  std::string out = "0x";
  out.reserve(42);
  for (std::size_t i = 2; i < text.size(); ++i) {
    if (hex_digit(text[i]) < 0) return std::nullopt;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  }
  return out;
}

std::optional<Wei> parse_wei(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  Wei v = 0;
  const Wei max = ~Wei{0};
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    const auto d = static_cast<unsigned>(c - '0');
    if (v > (max - d) / 10) return std::nullopt;
    v = v * 10 + d;
  }
  return v;
}

std::string format_wei(Wei value) {
  if (value == 0) return "0";
  std::string s;
  while (value > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

double wei_to_ether(Wei value) {
  const auto hi = static_cast<std::uint64_t>(value >> 64);
  const auto lo = static_cast<std::uint64_t>(value);
  return (static_cast<double>(hi) * 0x1.0p64 + static_cast<double>(lo)) * 1e-18;
}

std::optional<std::uint32_t> parse_method_id(std::string_view text) {
  text = trim(text);
  if (text.size() == 10 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) text.remove_prefix(2);
  if (text.size() != 8) return std::nullopt;
  std::uint32_t v = 0;
  for (char c : text) {
    const int d = hex_digit(c);
    if (d < 0) return std::nullopt;
    v = (v << 4) | static_cast<std::uint32_t>(d);
  }
  return v;
}

std::string format_method_id(std::uint32_t selector) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", selector);
  return buf;
}

}  // namespace sleid::txgraph
