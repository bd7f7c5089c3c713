#include "sleid/pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/text.hpp"

namespace sleid::pipeline {

using nlohmann::ordered_json;

std::string_view mode_name(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::kSupervisedOnly: return "supervised_only";
    case TrainingMode::kIfSupervised: return "if_supervised";
    case TrainingMode::kSleid: return "sleid";
  }
  return "?";
}

TrainingMode parse_mode(std::string_view s) {
  for (auto m : {TrainingMode::kSupervisedOnly, TrainingMode::kIfSupervised, TrainingMode::kSleid}) {
    if (mode_name(m) == s) return m;
  }
  fail(ErrorCode::kBadConfig, "unknown training mode '" + std::string(s) + "'");
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::kBadConfig, "bad value '" + std::string(value) + "' for " + std::string(key));
}

double to_real(std::string_view key, std::string_view v) {
  v = text::trim(v);
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  v = text::trim(v);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view v) {
  v = text::trim(v);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = text::trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

trees::IntRange to_int_range(std::string_view key, std::string_view v) {
  auto parts = text::split(v, ',');
  if (parts.size() != 2) bad_value(key, v);
  return {to_int(key, parts[0]), to_int(key, parts[1])};
}

trees::RealRange to_real_range(std::string_view key, std::string_view v) {
  auto parts = text::split(v, ',');
  if (parts.size() != 2 && parts.size() != 3) bad_value(key, v);
  trees::RealRange r{to_real(key, parts[0]), to_real(key, parts[1]), false};
  if (parts.size() == 3) {
    if (text::trim(parts[2]) != "log") bad_value(key, v);
    r.log_scale = true;
  }
  return r;
}

std::string fmt_real(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string fmt(const trees::IntRange& r) { return std::to_string(r.lo) + "," + std::to_string(r.hi); }
std::string fmt(const trees::RealRange& r) {
  return fmt_real(r.lo) + "," + fmt_real(r.hi) + (r.log_scale ? ",log" : "");
}

struct Option {
  std::string name;  // section.key
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<ordered_json(const PipelineConfig&)> get;
  std::function<std::string(const PipelineConfig&)> text;
};

template <typename Field>
Option string_opt(std::string name, Field field) {
  return {name, [field](PipelineConfig& c, std::string_view v) { c.*field = std::string(text::trim(v)); },
          [field](const PipelineConfig& c) { return ordered_json(c.*field); },
          [field](const PipelineConfig& c) { return c.*field; }};
}

const std::vector<Option>& options() {
  static const std::vector<Option> table = [] {
    std::vector<Option> t;
    t.push_back(string_opt("paths.records", &PipelineConfig::records));
    t.push_back(string_opt("paths.labels", &PipelineConfig::labels));
    t.push_back(string_opt("paths.registry", &PipelineConfig::registry));
    t.push_back(string_opt("paths.seeds", &PipelineConfig::seeds));
    t.push_back(string_opt("paths.out_dir", &PipelineConfig::out_dir));

#define SLEID_OPT(NAME, GET, SET) \
  t.push_back({NAME, [](PipelineConfig& c, std::string_view v) { SET; }, \
               [](const PipelineConfig& c) { return ordered_json(GET); }, \
               [](const PipelineConfig& c) { return text_of(GET); }})
    struct TextOf {
      std::string operator()(double v) const { return fmt_real(v); }
      std::string operator()(bool v) const { return v ? "true" : "false"; }
      std::string operator()(std::int64_t v) const { return std::to_string(v); }
      std::string operator()(std::uint64_t v) const { return std::to_string(v); }
      std::string operator()(int v) const { return std::to_string(v); }
      std::string operator()(std::uint32_t v) const { return std::to_string(v); }
      std::string operator()(std::string_view v) const { return std::string(v); }
    };
    static constexpr TextOf text_of{};

    SLEID_OPT("run.seed", c.seed, c.seed = to_unsigned("run.seed", v));
    SLEID_OPT("run.workers", c.workers, c.workers = static_cast<int>(to_int("run.workers", v)));
    SLEID_OPT("run.mode", mode_name(c.mode), c.mode = parse_mode(text::trim(v)));
    SLEID_OPT("run.ablation", c.ablation, c.ablation = to_bool("run.ablation", v));
    SLEID_OPT("run.drop_failed", c.drop_failed, c.drop_failed = to_bool("run.drop_failed", v));

    SLEID_OPT("expand.ratio_threshold", c.ratio_threshold, c.ratio_threshold = to_real("expand.ratio_threshold", v));
    SLEID_OPT("expand.max_layers", c.max_layers, c.max_layers = static_cast<int>(to_int("expand.max_layers", v)));

    SLEID_OPT("risk.threshold", c.risk.threshold, c.risk.threshold = to_real("risk.threshold", v));
    SLEID_OPT("risk.aggregate", riskrate::aggregate_mode_name(c.risk.mode),
              c.risk.mode = riskrate::parse_aggregate_mode(text::trim(v)));
    SLEID_OPT("risk.anonymity_decay", c.risk.anonymity_decay,
              c.risk.anonymity_decay = to_real("risk.anonymity_decay", v));
    SLEID_OPT("risk.wash_window_seconds", c.risk.wash_window_seconds,
              c.risk.wash_window_seconds = to_int("risk.wash_window_seconds", v));
    SLEID_OPT("risk.lifespan_decay_days", c.risk.lifespan_decay_days,
              c.risk.lifespan_decay_days = to_real("risk.lifespan_decay_days", v));

    SLEID_OPT("features.clip_percentile", c.clip_percentile,
              c.clip_percentile = to_real("features.clip_percentile", v));
    SLEID_OPT("features.rfe_target", static_cast<std::uint64_t>(c.rfe_target),
              c.rfe_target = to_unsigned("features.rfe_target", v));
    SLEID_OPT("features.rfe_step", c.rfe_step, c.rfe_step = to_real("features.rfe_step", v));
    SLEID_OPT("features.rfe_trees", c.rfe_trees,
              c.rfe_trees = static_cast<std::uint32_t>(to_unsigned("features.rfe_trees", v)));
    SLEID_OPT("features.rfe_max_depth", c.rfe_max_depth,
              c.rfe_max_depth = static_cast<std::uint32_t>(to_unsigned("features.rfe_max_depth", v)));

    SLEID_OPT("isoforest.contamination", c.contamination,
              c.contamination = to_real("isoforest.contamination", v));
    SLEID_OPT("isoforest.n_trees", c.iso_trees,
              c.iso_trees = static_cast<std::uint32_t>(to_unsigned("isoforest.n_trees", v)));
    SLEID_OPT("isoforest.subsample_size", c.iso_subsample,
              c.iso_subsample = static_cast<std::uint32_t>(to_unsigned("isoforest.subsample_size", v)));

    SLEID_OPT("tune.budget", static_cast<std::uint64_t>(c.tuner_budget),
              c.tuner_budget = to_unsigned("tune.budget", v));
    SLEID_OPT("tune.rf_n_estimators", fmt(c.space.rf_n_estimators),
              c.space.rf_n_estimators = to_int_range("tune.rf_n_estimators", v));
    SLEID_OPT("tune.rf_max_depth", fmt(c.space.rf_max_depth),
              c.space.rf_max_depth = to_int_range("tune.rf_max_depth", v));
    SLEID_OPT("tune.rf_min_samples_split", fmt(c.space.rf_min_samples_split),
              c.space.rf_min_samples_split = to_int_range("tune.rf_min_samples_split", v));
    SLEID_OPT("tune.rf_class_weight", fmt(c.space.rf_class_weight),
              c.space.rf_class_weight = to_real_range("tune.rf_class_weight", v));
    SLEID_OPT("tune.gbdt_max_depth", fmt(c.space.gbdt_max_depth),
              c.space.gbdt_max_depth = to_int_range("tune.gbdt_max_depth", v));
    SLEID_OPT("tune.gbdt_learning_rate", fmt(c.space.gbdt_learning_rate),
              c.space.gbdt_learning_rate = to_real_range("tune.gbdt_learning_rate", v));
    SLEID_OPT("tune.gbdt_n_estimators", fmt(c.space.gbdt_n_estimators),
              c.space.gbdt_n_estimators = to_int_range("tune.gbdt_n_estimators", v));
    SLEID_OPT("tune.gbdt_l2", fmt(c.space.gbdt_l2), c.space.gbdt_l2 = to_real_range("tune.gbdt_l2", v));

    SLEID_OPT("train.k_folds", c.k_folds, c.k_folds = static_cast<int>(to_int("train.k_folds", v)));
    SLEID_OPT("train.confidence", c.confidence, c.confidence = to_real("train.confidence", v));
    SLEID_OPT("train.max_iters", c.max_iters, c.max_iters = static_cast<int>(to_int("train.max_iters", v)));
#undef SLEID_OPT
    return t;
  }();
  return table;
}

const Option* find_option(std::string_view name) {
  for (const auto& o : options()) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

}  // namespace

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kBadConfig, what); };
  if (!(ratio_threshold > 0.0 && ratio_threshold <= 1.0)) bad("expand.ratio_threshold must lie in (0, 1]");
  if (max_layers < 1) bad("expand.max_layers must be at least 1");
  if (!(risk.threshold > 0.0 && risk.threshold <= 1.0)) bad("risk.threshold must lie in (0, 1]");
  if (!(risk.anonymity_decay > 0.0)) bad("risk.anonymity_decay must be positive");
  if (risk.wash_window_seconds < 0) bad("risk.wash_window_seconds must be non-negative");
  if (!(risk.lifespan_decay_days > 0.0)) bad("risk.lifespan_decay_days must be positive");
  if (!(clip_percentile > 0.0 && clip_percentile <= 100.0)) bad("features.clip_percentile must lie in (0, 100]");
  if (rfe_target < 1) bad("features.rfe_target must be at least 1");
  if (!(rfe_step > 0.0 && rfe_step < 1.0)) bad("features.rfe_step must lie in (0, 1)");
  if (rfe_trees < 1 || rfe_max_depth < 1) bad("features.rfe_trees and rfe_max_depth must be positive");
  if (!(contamination > 0.0 && contamination < 0.5)) bad("isoforest.contamination must lie in (0, 0.5)");
  if (iso_trees < 1 || iso_subsample < 2) bad("isoforest.n_trees >= 1 and subsample_size >= 2 required");
  if (tuner_budget < 1) bad("tune.budget must be at least 1");
  space.validate();
  if (k_folds < 2) bad("train.k_folds must be at least 2");
  if (!(confidence > 0.5 && confidence < 1.0)) bad("train.confidence must lie in (0.5, 1)");
  if (max_iters < 1) bad("train.max_iters must be at least 1");
}

ordered_json PipelineConfig::to_json() const {
  ordered_json out = ordered_json::object();
  for (const auto& o : options()) {
    const auto dot = o.name.find('.');
    out[o.name.substr(0, dot)][o.name.substr(dot + 1)] = o.get(*this);
  }
  return out;
}

std::string PipelineConfig::to_ini() const {
  std::string out;
  std::string section;
  for (const auto& o : options()) {
    const auto dot = o.name.find('.');
    const auto s = o.name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += o.name.substr(dot + 1) + " = " + o.text(*this) + '\n';
  }
  return out;
}

void set_option(PipelineConfig& config, std::string_view dotted_key, std::string_view value) {
  const Option* o = find_option(text::trim(dotted_key));
  if (!o) fail(ErrorCode::kBadConfig, "unknown configuration key '" + std::string(dotted_key) + "'");
  o->set(config, value);
}

void apply_override(PipelineConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorCode::kBadConfig, "override must look like section.key=value: '" + std::string(assignment) + "'");
  }
  set_option(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<std::string> option_names() {
  std::vector<std::string> out;
  for (const auto& o : options()) out.push_back(o.name);
  return out;
}

PipelineConfig parse_config(std::string_view ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::kBadConfig, "config line " + std::to_string(e.line()) + ": " + e.message());
  }
  PipelineConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      fail(ErrorCode::kBadConfig, "key '" + section + "' outside a section or empty section");
    }
    for (const auto& [key, value] : body) set_option(config, section + "." + key, value.data());
  }
  return config;
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace sleid::pipeline
