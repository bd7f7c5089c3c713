#include "sleid/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sleid/common/error.hpp"

namespace sleid::metrics {

namespace {

double ratio(double num, double den, bool& zero) {
  if (den == 0.0) {
    zero = true;
    return 0.0;
  }
  return num / den;
}

ClassMetrics class_metrics(double tp, double fp, double fn, bool& zero) {
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp, zero);
  m.recall = ratio(tp, tp + fn, zero);
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, zero);
  m.support = static_cast<std::uint64_t>(tp + fn);
  return m;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorCode::kBadConfig, "y_true and y_pred lengths differ");
  if (y_true.empty()) fail(ErrorCode::kEmptyInput, "no predictions to evaluate");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) fail(ErrorCode::kBadConfig, "labels must be 0 or 1");
    if (t == 1) (p == 1 ? c.tp : c.fn)++;
    else (p == 1 ? c.fp : c.tn)++;
  }
  return c;
}

MetricReport report_from_counts(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorCode::kEmptyInput, "no predictions to evaluate");
  MetricReport r;
  r.counts = c;
  bool zero = false;
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  r.illicit = class_metrics(tp, fp, fn, zero);
  r.licit = class_metrics(tn, fn, fp, zero);
  const double n = static_cast<double>(c.total());
  r.accuracy = (tp + tn) / n;
  r.weighted_f1 = (static_cast<double>(r.licit.support) * r.licit.f1 +
                   static_cast<double>(r.illicit.support) * r.illicit.f1) / n;
  r.mcc = mcc(c);
  r.zero_division = zero;
  return r;
}

MetricReport classification_report(std::span<const int> y_true, std::span<const int> y_pred) {
  return report_from_counts(confusion(y_true, y_pred));
}

double mcc(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

double pr_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) fail(ErrorCode::kBadConfig, "y_true and scores lengths differ");
  if (y_true.empty()) fail(ErrorCode::kEmptyInput, "no scores to evaluate");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] != 0 && y_true[i] != 1) fail(ErrorCode::kBadConfig, "labels must be 0 or 1");
    if (!std::isfinite(scores[i])) fail(ErrorCode::kBadConfig, "scores must be finite");
    positives += static_cast<std::size_t>(y_true[i]);
  }
  if (positives == 0) fail(ErrorCode::kUndefined, "PR-AUC is undefined without positives");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_tp += static_cast<std::size_t>(y_true[order[j]]);
      ++j;
    }
    tp += group_tp;
    seen = j;
    if (group_tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += static_cast<double>(group_tp) / static_cast<double>(positives) * precision;
    }
    i = j;
  }
  return ap;
}

TableRow TableRow::from_report(std::string name, const MetricReport& r) {
  return TableRow{std::move(name), r.illicit.precision, r.illicit.recall, r.illicit.f1, r.accuracy};
}

AblationTable ablation_table(std::vector<TableRow> runs, bool sort_by_f1) {
  if (runs.size() < 2) fail(ErrorCode::kBadConfig, "an ablation table needs at least two runs");
  if (sort_by_f1) {
    std::stable_sort(runs.begin(), runs.end(), [](const TableRow& a, const TableRow& b) { return a.f1 > b.f1; });
  }
  return AblationTable{std::move(runs)};
}

std::string AblationTable::to_text() const {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto pad = [](std::string s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  std::string out = pad("Model", width, false) + "  " + pad("Precision", 9, true) + "  " +
                    pad("Recall", 9, true) + "  " + pad("F1", 9, true) + "  " + pad("Accuracy", 9, true) + "\n";
  out += std::string(width + 4 * 11, '-') + "\n";
  for (const auto& r : rows) {
    out += pad(r.name, width, false) + "  " + pad(pct(r.precision), 9, true) + "  " +
           pad(pct(r.recall), 9, true) + "  " + pad(pct(r.f1), 9, true) + "  " +
           pad(pct(r.accuracy), 9, true) + "\n";
  }
  return out;
}

std::string AblationTable::to_csv() const {
  std::string out = "model,precision,recall,f1,accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", r.precision, r.recall, r.f1, r.accuracy);
    out += r.name + buf;
  }
  return out;
}

nlohmann::ordered_json AblationTable::to_json() const {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = r.name;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["accuracy"] = r.accuracy;
    arr.push_back(j);
  }
  return arr;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  auto cls = [](const ClassMetrics& m) {
    nlohmann::ordered_json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["support"] = m.support;
    return j;
  };
  nlohmann::ordered_json j;
  j["licit"] = cls(r.licit);
  j["illicit"] = cls(r.illicit);
  j["accuracy"] = r.accuracy;
  j["weighted_f1"] = r.weighted_f1;
  j["mcc"] = r.mcc;
  j["pr_auc"] = r.pr_auc ? nlohmann::ordered_json(*r.pr_auc) : nlohmann::ordered_json(nullptr);
  j["confusion"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
  j["zero_division"] = r.zero_division;
  return j;
}

}  // namespace sleid::metrics
