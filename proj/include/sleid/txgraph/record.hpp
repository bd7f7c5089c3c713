#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sleid::txgraph {

// Wei-scale amounts. 2^128 comfortably exceeds total ether supply in wei.
using Wei = unsigned __int128;

enum class TxKind : std::uint8_t {
  kNativeTransfer = 0,
  kErc20Transfer = 1,
  kApprove = 2,
  kContractCall = 3,
};

enum class TxStatus : std::uint8_t { kSuccess = 0, kFailed = 1 };

struct TransactionRecord {
  std::string tx_hash;
  // Multi-recipient token events are flattened to one record per receiver;
  // (tx_hash, sub_index) is the uniqueness key.
  std::uint32_t sub_index = 0;
  std::uint64_t block_height = 0;
  std::int64_t timestamp = 0;
  std::string sender;
  std::string receiver;
  Wei native_value = 0;
  Wei fee = 0;
  TxKind kind = TxKind::kNativeTransfer;
  std::optional<std::string> token_contract;
  std::optional<std::uint32_t> method_id;
  // Token amount for erc20_transfer / approve events; 0 otherwise.
  Wei token_value = 0;
  TxStatus status = TxStatus::kSuccess;

  bool operator==(const TransactionRecord&) const = default;
};

std::string_view kind_name(TxKind kind);
std::optional<TxKind> parse_kind(std::string_view text);

// Lowercase 0x-prefixed 40-hex-digit form; nullopt when malformed.
std::optional<std::string> normalize_address(std::string_view text);

std::optional<Wei> parse_wei(std::string_view text);
std::string format_wei(Wei value);
// Wei to ether as a double (features are scale-free; this just keeps them readable).
double wei_to_ether(Wei value);

std::optional<std::uint32_t> parse_method_id(std::string_view text);
std::string format_method_id(std::uint32_t selector);

}  // namespace sleid::txgraph
