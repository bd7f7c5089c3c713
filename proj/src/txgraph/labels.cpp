#include "sleid/txgraph/labels.hpp"

#include <sstream>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/txgraph/record.hpp"
#include "sleid/common/text.hpp"

namespace sleid::txgraph {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kLicit: return "licit";
    case Label::kIllicit: return "illicit";
    case Label::kUnknown: return "unknown";
    case Label::kPseudoIllicit: return "pseudo_illicit";
    case Label::kFilteredUnknown: return "filtered_unknown";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view s) {
  s = text::trim(s);
  if (s == "licit" || s == "0") return Label::kLicit;
  if (s == "illicit" || s == "1") return Label::kIllicit;
  if (s == "unknown" || s.empty()) return Label::kUnknown;
  if (s == "pseudo_illicit") return Label::kPseudoIllicit;
  if (s == "filtered_unknown") return Label::kFilteredUnknown;
  return std::nullopt;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kSeed: return "seed";
    case Provenance::kRiskRule: return "risk_rule";
    case Provenance::kIsolationForest: return "isolation_forest";
    case Provenance::kSelfTraining: return "self_training";
  }
  return "seed";
}

LabelState LabelState::seed(Label label) {
  if (label == Label::kUnknown) return LabelState();
  if (label != Label::kLicit && label != Label::kIllicit) {
    fail(ErrorCode::kInvalidTransition, "seed labels must be licit or illicit");
  }
  return LabelState(label, Provenance::kSeed);
}

LabelState LabelState::risk_rule_licit() { return LabelState(Label::kLicit, Provenance::kRiskRule); }

LabelState LabelState::transition(Label to, Provenance provenance) const {
  const bool model_provenance =
      provenance == Provenance::kIsolationForest || provenance == Provenance::kSelfTraining;
  bool ok = false;
  if (label_ == Label::kUnknown) {
    ok = (to == Label::kPseudoIllicit || to == Label::kFilteredUnknown) && model_provenance;
  } else if (label_ == Label::kFilteredUnknown) {
    ok = (to == Label::kPseudoIllicit || to == Label::kLicit) &&
         provenance == Provenance::kSelfTraining;
  }
  if (!ok) {
    fail(ErrorCode::kInvalidTransition,
         std::string("label transition ") + std::string(label_name(label_)) + " -> " +
             std::string(label_name(to)) + " via " + std::string(provenance_name(provenance)) +
             " is not allowed");
  }
  return LabelState(to, provenance);
}

LabelBook parse_label_book(std::string_view csv_text) {
  LabelBook book;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto line : text::split_lines(csv_text)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = text::split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (cells.size() >= 2 && text::trim(cells[0]) == "address") continue;
    }
    if (cells.size() < 2) {
      fail(ErrorCode::kParseError, "labels line " + std::to_string(line_no) + ": expected address,label");
    }
    auto address = normalize_address(cells[0]);
    if (!address) {
      fail(ErrorCode::kParseError, "labels line " + std::to_string(line_no) + ": malformed address");
    }
    auto label = parse_label(cells[1]);
    if (!label || (*label != Label::kLicit && *label != Label::kIllicit && *label != Label::kUnknown)) {
      fail(ErrorCode::kParseError, "labels line " + std::to_string(line_no) + ": bad label");
    }
    book[*address] = LabelState::seed(*label);
  }
  return book;
}

LabelBook read_label_book(const std::string& path) { return parse_label_book(read_file(path)); }

std::string format_label_book(const LabelBook& book) {
  std::ostringstream out;
  out << "address,label\n";
  for (const auto& [address, state] : book) out << address << ',' << label_name(state.label()) << '\n';
  return out.str();
}

}  // namespace sleid::txgraph
