#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sleid::metrics {

// Illicit (1) is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricReport {
  ClassMetrics licit;
  ClassMetrics illicit;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double mcc = 0.0;
  std::optional<double> pr_auc;
  ConfusionCounts counts;
  // Set when any ratio had a zero denominator and was reported as 0.
  bool zero_division = false;
};

// Errors: length mismatch or non-binary labels -> kBadConfig; empty -> kEmptyInput.
ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred);
MetricReport classification_report(std::span<const int> y_true, std::span<const int> y_pred);
MetricReport report_from_counts(const ConfusionCounts& c);

// Zero denominator -> 0.
double mcc(const ConfusionCounts& c);

// Average precision with tied scores grouped. Errors: no positives ->
// kUndefined; non-finite scores or mismatch -> kBadConfig; empty -> kEmptyInput.
double pr_auc(std::span<const int> y_true, std::span<const double> scores);

// One line of the comparison table (illicit-class precision/recall/F1 and
// overall accuracy, each in [0, 1]).
struct TableRow {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;

  static TableRow from_report(std::string name, const MetricReport& r);
  bool operator==(const TableRow&) const = default;
};

struct AblationTable {
  std::vector<TableRow> rows;

  std::string to_text() const;  // percentages with two decimals
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

// Errors: fewer than two rows -> kBadConfig. With sort_by_f1 the rows are
// ordered by descending F1 (stable).
AblationTable ablation_table(std::vector<TableRow> runs, bool sort_by_f1 = false);

nlohmann::ordered_json to_json(const MetricReport& r);

}  // namespace sleid::metrics
