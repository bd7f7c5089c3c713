#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sleid::txgraph {

enum class Label : std::uint8_t {
  kLicit,
  kIllicit,
  kUnknown,
  kPseudoIllicit,
  kFilteredUnknown,
};

enum class Provenance : std::uint8_t {
  kSeed,
  kRiskRule,
  kIsolationForest,
  kSelfTraining,
};

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view s);
std::string_view provenance_name(Provenance p);

// Five-state label lattice. Seeds are immutable; pseudo states can only be
// produced by the isolation forest or by self-training.
class LabelState {
 public:
  LabelState() = default;

  static LabelState unknown() { return LabelState(); }
  static LabelState seed(Label label);        // licit or illicit from a label file
  static LabelState risk_rule_licit();         // reliably-normal by the risk rule

  Label label() const { return label_; }
  std::optional<Provenance> provenance() const { return provenance_; }

  bool is_known_class() const { return label_ == Label::kLicit || label_ == Label::kIllicit; }

  // Throws kInvalidTransition when the move is not allowed.
  LabelState transition(Label to, Provenance provenance) const;

  bool operator==(const LabelState&) const = default;

 private:
  LabelState(Label l, std::optional<Provenance> p) : label_(l), provenance_(p) {}

  Label label_ = Label::kUnknown;
  std::optional<Provenance> provenance_;
};

// address -> label, as read from a labels CSV (address,label).
using LabelBook = std::map<std::string, LabelState, std::less<>>;

LabelBook parse_label_book(std::string_view csv_text);
LabelBook read_label_book(const std::string& path);
std::string format_label_book(const LabelBook& book);

}  // namespace sleid::txgraph
