#include "sleid/pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "sleid/common/binio.hpp"
#include "sleid/common/parallel.hpp"
#include "sleid/common/rng.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/common/text.hpp"
#include "sleid/metrics/metrics.hpp"
#include "sleid/trees/learners.hpp"
#include "sleid/txgraph/io.hpp"

namespace sleid::pipeline {

using nlohmann::ordered_json;
using txgraph::Label;

namespace {

enum StageKey : std::uint64_t { kRfeKey = 1, kIsoKey = 2, kTuneKey = 3, kCvKey = 4, kFinalKey = 5, kPermKey = 6 };

std::uint64_t stage_seed(const PipelineConfig& c, StageKey key) { return derive_seed(c.seed, {0x91, key}); }

std::optional<expand::AdmissionReason> parse_reason(std::string_view s) {
  for (auto r : {expand::AdmissionReason::kSeed, expand::AdmissionReason::kLowRisk, expand::AdmissionReason::kDefi}) {
    if (expand::reason_name(r) == s) return r;
  }
  return std::nullopt;
}

ordered_json rf_json(const trees::RfParams& p) {
  ordered_json j;
  j["n_estimators"] = p.n_estimators;
  j["max_depth"] = p.max_depth;
  j["min_samples_split"] = p.min_samples_split;
  j["class_weight"] = p.class_weight;
  j["max_features"] = p.max_features;
  return j;
}

ordered_json gbdt_json(const trees::GbdtParams& p) {
  ordered_json j;
  j["n_estimators"] = p.n_estimators;
  j["max_depth"] = p.max_depth;
  j["learning_rate"] = p.learning_rate;
  j["l2"] = p.l2;
  j["min_child_weight"] = p.min_child_weight;
  return j;
}

std::vector<std::size_t> rows_of(const features::FeatureMatrix& x, const std::vector<std::string>& addresses) {
  std::vector<std::size_t> out;
  out.reserve(addresses.size());
  for (const auto& a : addresses) {
    auto it = std::lower_bound(x.rows.begin(), x.rows.end(), a);
    if (it == x.rows.end() || *it != a) fail(ErrorCode::kNotFound, "row " + a + " missing from the matrix");
    out.push_back(static_cast<std::size_t>(it - x.rows.begin()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<expand::CoreEntry> parse_core_csv(std::string_view input) {
  std::vector<expand::CoreEntry> out;
  auto lines = text::split_lines(input);
  if (lines.empty() || text::trim(lines[0]) != "address,label,layer,reason") {
    fail(ErrorCode::kParseError, "line 1: expected header address,label,layer,reason");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto err = [&](const std::string& what) {
      fail(ErrorCode::kParseError, "line " + std::to_string(i + 1) + ": " + what);
    };
    auto cells = text::split(lines[i], ',');
    if (cells.size() != 4) err("expected four columns");
    expand::CoreEntry e;
    auto a = txgraph::normalize_address(text::trim(cells[0]));
    if (!a) err("malformed address");
    e.address = *a;
    auto label = txgraph::parse_label(text::trim(cells[1]));
    if (!label) err("bad label");
    e.label = *label;
    try {
      e.layer = std::stoi(std::string(text::trim(cells[2])));
    } catch (const std::exception&) {
      err("bad layer");
    }
    auto reason = parse_reason(text::trim(cells[3]));
    if (!reason) err("bad reason");
    e.reason = *reason;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.address < y.address; });
  return out;
}

std::vector<std::string> parse_address_list(std::string_view input) {
  std::vector<std::string> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(input)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    auto a = txgraph::normalize_address(line);
    if (!a) fail(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": malformed address");
    out.push_back(*a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CoreSplit split_core(const std::vector<expand::CoreEntry>& core) {
  CoreSplit s;
  for (std::size_t i = 0; i < core.size(); ++i) {
    const auto& e = core[i];
    if (e.label == Label::kIllicit) {
      s.labeled_rows.push_back(i);
      s.labels.push_back(1);
    } else if (e.label == Label::kLicit) {
      s.labeled_rows.push_back(i);
      s.labels.push_back(0);
    } else if (e.reason == expand::AdmissionReason::kLowRisk) {
      s.labeled_rows.push_back(i);
      s.labels.push_back(0);
      ++s.risk_rule_licit;
    } else {
      s.unknown_rows.push_back(i);
    }
  }
  return s;
}

features::FeatureMatrix transform(const features::FeatureMatrix& raw, const features::Preprocessor& pre,
                                  const std::vector<std::string>& selected) {
  return features::apply_preprocessor(pre, raw).select_columns(selected);
}

Featurized featurize(const txgraph::LedgerGraph& graph, const std::vector<expand::CoreEntry>& core,
                     const PipelineConfig& config) {
  Featurized f;
  std::vector<std::string> addresses;
  addresses.reserve(core.size());
  for (const auto& e : core) addresses.push_back(e.address);
  f.raw = features::build_matrix(graph, addresses, config.workers);
  if (f.raw.rows != addresses) fail(ErrorCode::kSchemaError, "core addresses are not sorted and unique");
  f.preprocessor = features::fit_preprocessor(f.raw, config.clip_percentile);
  const auto full = features::apply_preprocessor(f.preprocessor, f.raw, &f.preprocess_report);

  const auto split = split_core(core);
  const auto labeled = full.select_rows(split.labeled_rows);
  trees::RfParams rp;
  rp.n_estimators = config.rfe_trees;
  rp.max_depth = config.rfe_max_depth;
  const auto seed = stage_seed(config, kRfeKey);
  const int workers = config.workers;
  features::ImportanceFn importance = [&](const features::FeatureMatrix& m, std::span<const int> y) {
    return trees::fit_random_forest(m, y, rp, seed, workers).importances;
  };
  const auto target = std::min(config.rfe_target, full.n_cols());
  f.rfe = features::rfe(labeled, split.labels, target, importance, config.rfe_step);
  f.x = full.select_columns(f.rfe.selected);
  return f;
}

PseudoLabels assign_pseudo_labels(const features::FeatureMatrix& x, const CoreSplit& split,
                                  const PipelineConfig& config) {
  PseudoLabels p;
  if (split.unknown_rows.size() < 2) {
    p.filtered_rows = split.unknown_rows;
    return p;
  }
  const auto pool = x.select_rows(split.unknown_rows);
  isoforest::IsoParams ip;
  ip.n_trees = config.iso_trees;
  ip.subsample_size = config.iso_subsample;
  ip.seed = stage_seed(config, kIsoKey);
  ip.workers = config.workers;
  p.model = isoforest::fit(pool, ip);
  p.partition = isoforest::partition_unknowns(p.model, pool, config.contamination, config.workers);
  p.pseudo_illicit_rows = rows_of(x, p.partition.pseudo_illicit);
  p.filtered_rows = rows_of(x, p.partition.filtered_unknown);
  return p;
}

trees::TuneResult tune_learners(const features::FeatureMatrix& x, const CoreSplit& split,
                                const PseudoLabels& pseudo, const PipelineConfig& config) {
  trees::TuneOptions o;
  o.budget = config.tuner_budget;
  o.k_folds = config.k_folds;
  o.seed = stage_seed(config, kTuneKey);
  o.workers = config.workers;
  const std::vector<int> extra_y(pseudo.pseudo_illicit_rows.size(), 1);
  return trees::tune(x, split.labeled_rows, split.labels, pseudo.pseudo_illicit_rows, extra_y, config.space, o);
}

ModeResult train_mode(const features::FeatureMatrix& x, const CoreSplit& split, const PseudoLabels& pseudo,
                      const selftrain::LearnerConfig& learners, TrainingMode mode, const PipelineConfig& config) {
  ModeResult out;
  out.mode = mode;
  std::vector<std::size_t> extras;
  std::vector<std::size_t> pool;
  selftrain::SelfTrainParams params;
  params.confidence = config.confidence;
  params.max_iters = 1;
  params.workers = config.workers;
  if (mode != TrainingMode::kSupervisedOnly) extras = pseudo.pseudo_illicit_rows;
  if (mode == TrainingMode::kSleid) {
    pool = pseudo.filtered_rows;
    params.max_iters = config.max_iters;
  }
  const std::vector<int> extra_y(extras.size(), 1);
  out.run = selftrain::cross_validate(x, split.labeled_rows, split.labels, extras, extra_y, pool, learners,
                                      params, config.k_folds, stage_seed(config, kCvKey));

  std::vector<std::size_t> train_rows = split.labeled_rows;
  std::vector<int> train_y = split.labels;
  train_rows.insert(train_rows.end(), extras.begin(), extras.end());
  train_y.insert(train_y.end(), extra_y.begin(), extra_y.end());
  out.final_iterations = out.run.modal_retained_iteration;
  out.final_fit = selftrain::self_train_fixed(x, train_rows, train_y, pool, learners, params, out.final_iterations,
                                              stage_seed(config, kFinalKey));
  return out;
}

std::vector<double> permutation_importance(const trees::VotingModel& model, const features::FeatureMatrix& x,
                                           const std::vector<std::size_t>& rows, const std::vector<int>& y,
                                           std::uint64_t seed, int repeats) {
  const auto base_m = x.select_rows(rows);
  auto f1_of = [&](const features::FeatureMatrix& m) {
    const auto p = model.predict_p1(m, 1);
    std::vector<int> pred(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) pred[i] = trees::vote_label(p[i]);
    return metrics::classification_report(y, pred).illicit.f1;
  };
  const double base = f1_of(base_m);
  std::vector<double> out(x.n_cols(), 0.0);
  for (std::size_t c = 0; c < x.n_cols(); ++c) {
    double drop = 0.0;
    for (int r = 0; r < repeats; ++r) {
      auto m = base_m;
      std::vector<double> col(m.n_rows());
      for (std::size_t i = 0; i < m.n_rows(); ++i) col[i] = m.at(i, c);
      Rng rng(derive_seed(seed, {c, static_cast<std::uint64_t>(r)}));
      rng.shuffle(col);
      for (std::size_t i = 0; i < m.n_rows(); ++i) m.at(i, c) = col[i];
      drop += base - f1_of(m);
    }
    out[c] = drop / repeats;
  }
  return out;
}

namespace {

ordered_json build_report(const PipelineResult& r, const PipelineInputs& in, const PipelineConfig& config,
                          const std::vector<double>& perm) {
  ordered_json j;
  j["seed"] = config.seed;
  auto cfg = config.to_json();
  cfg["run"].erase("workers");
  cfg["paths"].erase("out_dir");
  j["config"] = cfg;

  ordered_json g;
  g["accounts"] = in.graph->account_count();
  g["transactions"] = in.graph->tx_count();
  g["seeds"] = in.seeds.size();
  j["graph"] = g;

  ordered_json e;
  e["status"] = std::string(expand::status_name(r.expansion.status));
  e["layers"] = r.expansion.layer_index;
  e["core_size"] = r.expansion.core.size();
  e["illicit_count"] = r.expansion.illicit_count;
  e["illicit_ratio"] = r.expansion.illicit_ratio();
  auto layers = ordered_json::array();
  for (std::size_t i = 0; i < r.expansion.admitted_per_layer.size(); ++i) {
    const auto& l = r.expansion.admitted_per_layer[i];
    layers.push_back({{"layer", i + 1}, {"evaluated", l.evaluated}, {"low_risk", l.low_risk}, {"defi", l.defi}});
  }
  e["per_layer"] = layers;
  j["expansion"] = e;

  ordered_json s;
  const auto n_ill = static_cast<std::size_t>(std::count(r.split.labels.begin(), r.split.labels.end(), 1));
  s["labeled"] = r.split.labeled_rows.size();
  s["labeled_illicit"] = n_ill;
  s["labeled_licit"] = r.split.labeled_rows.size() - n_ill;
  s["risk_rule_licit"] = r.split.risk_rule_licit;
  s["unknown"] = r.split.unknown_rows.size();
  j["split"] = s;

  ordered_json f;
  f["extracted_columns"] = r.features.raw.n_cols();
  f["dropped_columns"] = r.features.preprocess_report.dropped_columns;
  f["imputed_cells"] = r.features.preprocess_report.imputed_cells;
  f["clipped_cells"] = r.features.preprocess_report.clipped_cells;
  f["selected"] = r.features.rfe.selected;
  f["rfe_rounds"] = r.features.rfe.rounds.size();
  f["matrix_digest"] = hex64(r.features.x.digest());
  j["features"] = f;

  ordered_json iso;
  iso["pool"] = r.split.unknown_rows.size();
  iso["contamination"] = config.contamination;
  iso["pseudo_illicit"] = r.pseudo.pseudo_illicit_rows.size();
  iso["filtered_unknown"] = r.pseudo.filtered_rows.size();
  iso["addresses"] = r.pseudo.partition.pseudo_illicit;
  j["isoforest"] = iso;

  ordered_json t;
  t["budget"] = config.tuner_budget;
  t["best_rf_trial"] = r.tuning.best_rf_trial;
  t["best_gbdt_trial"] = r.tuning.best_gbdt_trial;
  t["rf"] = rf_json(r.learners.rf);
  t["gbdt"] = gbdt_json(r.learners.gbdt);
  j["tuning"] = t;

  auto modes = ordered_json::array();
  for (const auto& m : r.modes) {
    ordered_json mj;
    mj["mode"] = std::string(mode_name(m.mode));
    mj["pooled"] = metrics::to_json(m.run.pooled);
    mj["modal_retained_iteration"] = m.run.modal_retained_iteration;
    mj["final_iterations"] = m.final_iterations;
    std::size_t adm_ill = 0;
    for (int v : m.final_fit.admitted_labels) adm_ill += v == 1;
    mj["final_admitted_illicit"] = adm_ill;
    mj["final_admitted_licit"] = m.final_fit.admitted_labels.size() - adm_ill;
    mj["training"] = m.run.to_json();
    modes.push_back(mj);
  }
  j["modes"] = modes;

  if (r.modes.size() >= 2) {
    std::vector<metrics::TableRow> rows;
    for (const auto& m : r.modes) rows.push_back(metrics::TableRow::from_report(std::string(mode_name(m.mode)), m.run.pooled));
    j["ablation"] = metrics::ablation_table(rows).to_json();
  }

  auto pj = ordered_json::array();
  for (std::size_t c = 0; c < perm.size(); ++c) pj.push_back({{"feature", r.features.x.columns[c]}, {"importance", perm[c]}});
  j["permutation_importance"] = pj;
  j["model_digest"] = hex64(fnv1a64(trees::serialize_voting(r.primary().final_fit.model)));
  return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& config) {
  run_stage("config", [&] {
    config.validate();
    if (!in.graph || !in.registry) fail(ErrorCode::kBadConfig, "graph and registry are required");
  });
  PipelineResult r;
  r.expansion = run_stage("expand", [&] {
    expand::ExpandParams ep;
    ep.ratio_threshold = config.ratio_threshold;
    ep.risk = config.risk;
    ep.max_layers = config.max_layers;
    ep.workers = config.workers;
    return expand::expand_dataset(*in.graph, in.seeds, *in.registry, ep, in.labels);
  });
  r.split = split_core(r.expansion.core);
  r.features = run_stage("featurize", [&] { return featurize(*in.graph, r.expansion.core, config); });
  r.pseudo = run_stage("isoforest", [&] { return assign_pseudo_labels(r.features.x, r.split, config); });
  r.tuning = run_stage("tune", [&] { return tune_learners(r.features.x, r.split, r.pseudo, config); });
  r.learners.rf = r.tuning.best_rf;
  r.learners.gbdt = r.tuning.best_gbdt;

  std::vector<TrainingMode> modes{config.mode};
  if (config.ablation) {
    for (auto m : {TrainingMode::kSupervisedOnly, TrainingMode::kIfSupervised, TrainingMode::kSleid}) {
      if (m != config.mode) modes.push_back(m);
    }
  }
  run_stage("train", [&] {
    for (auto m : modes) r.modes.push_back(train_mode(r.features.x, r.split, r.pseudo, r.learners, m, config));
  });
  const auto perm = run_stage("evaluate", [&] {
    return permutation_importance(r.primary().final_fit.model, r.features.x, r.split.labeled_rows, r.split.labels,
                                  stage_seed(config, kPermKey));
  });
  r.report = build_report(r, in, config, perm);
  return r;
}

std::string PipelineResult::report_text() const {
  std::ostringstream out;
  char buf[256];
  out << "core: " << expansion.core.size() << " accounts, " << expansion.illicit_count << " illicit seeds, ratio ";
  std::snprintf(buf, sizeof buf, "%.4f", expansion.illicit_ratio());
  out << buf << " (" << expand::status_name(expansion.status) << " after " << expansion.layer_index << " layers)\n";
  const auto n_ill = std::count(split.labels.begin(), split.labels.end(), 1);
  out << "labeled: " << split.labeled_rows.size() << " (" << n_ill << " illicit), unknown pool: "
      << split.unknown_rows.size() << ", pseudo-illicit: " << pseudo.pseudo_illicit_rows.size() << '\n';
  out << "features: " << features.x.n_cols() << " of " << features.raw.n_cols() << " selected\n\n";
  std::vector<metrics::TableRow> rows;
  for (const auto& m : modes) rows.push_back(metrics::TableRow::from_report(std::string(mode_name(m.mode)), m.run.pooled));
  if (rows.size() >= 2) {
    out << metrics::ablation_table(rows).to_text();
  } else {
    metrics::AblationTable t{rows};
    out << t.to_text();
  }
  const auto& p = primary().run.pooled;
  std::snprintf(buf, sizeof buf, "\n%s: weighted F1 %.4f, MCC %.4f", std::string(mode_name(primary().mode)).c_str(),
                p.weighted_f1, p.mcc);
  out << buf;
  if (p.pr_auc) {
    std::snprintf(buf, sizeof buf, ", PR-AUC %.4f", *p.pr_auc);
    out << buf;
  }
  out << ", retained iteration " << primary().run.modal_retained_iteration << '\n';
  return out.str();
}

std::string PipelineResult::predictions_csv() const {
  const auto p = primary().final_fit.model.predict_p1(features.x, 1);
  std::vector<std::string> role(features.x.n_rows(), "unknown");
  for (std::size_t i = 0; i < split.labeled_rows.size(); ++i) {
    role[split.labeled_rows[i]] = split.labels[i] ? "illicit" : "licit";
  }
  for (auto r : pseudo.pseudo_illicit_rows) role[r] = "pseudo_illicit";
  std::string out = "address,p_illicit,predicted,role\n";
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.17g,%d,", p[i], trees::vote_label(p[i]));
    out += features.x.rows[i] + buf + role[i] + '\n';
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  run_stage("config", [&] {
    config.validate();
    if (config.records.empty()) fail(ErrorCode::kBadConfig, "paths.records is required");
    if (config.registry.empty()) fail(ErrorCode::kBadConfig, "paths.registry is required");
    if (config.seeds.empty() && config.labels.empty()) {
      fail(ErrorCode::kBadConfig, "paths.seeds or paths.labels is required");
    }
  });
  txgraph::LabelBook labels;
  riskrate::DefiRegistry registry;
  std::vector<std::string> seeds;
  auto graph = run_stage("ingest", [&] {
    if (!config.labels.empty()) labels = txgraph::read_label_book(config.labels);
    registry = riskrate::read_registry(config.registry);
    if (!config.seeds.empty()) {
      seeds = parse_address_list(read_file(config.seeds));
    } else {
      for (const auto& [a, s] : labels) {
        if (s.label() == Label::kIllicit) seeds.push_back(a);
      }
    }
    txgraph::IngestOptions io;
    io.drop_failed = config.drop_failed;
    return txgraph::load_graph(config.records, io, config.labels.empty() ? nullptr : &labels);
  });

  PipelineInputs in;
  in.graph = &graph;
  in.seeds = seeds;
  in.registry = &registry;
  in.labels = config.labels.empty() ? nullptr : &labels;
  auto r = run_pipeline(in, config);

  run_stage("persist", [&] {
    namespace fs = std::filesystem;
    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    auto put = [&](const char* name, std::string_view bytes) { write_file((dir / name).string(), bytes); };
    put("config.ini", config.to_ini());
    put("graph.slgraph", txgraph::serialize_graph(graph));
    put("core.csv", expand::format_core_csv(r.expansion));
    put("risk.csv", riskrate::format_risk_csv(graph, riskrate::score_all(graph, registry, config.risk, config.workers)));
    put("features_raw.slfeat", features::serialize_matrix(r.features.raw));
    put("features.slfeat", features::serialize_matrix(r.features.x));
    put("schema.json", features::schema_manifest(r.features.x));
    put("preprocessor.bin", features::serialize_preprocessor(r.features.preprocessor));
    std::string sel;
    for (const auto& c : r.features.rfe.selected) sel += c + '\n';
    put("selected_columns.txt", sel);
    if (!r.pseudo.model.trees.empty()) put("isoforest.slif", isoforest::serialize_model(r.pseudo.model));
    std::string pseudo = "address,anomaly_score,assignment\n";
    const auto& part = r.pseudo.partition;
    char buf[48];
    for (std::size_t i = 0; i < r.split.unknown_rows.size() && i < part.scores.size(); ++i) {
      const auto& a = r.features.x.rows[r.split.unknown_rows[i]];
      const bool flagged = std::binary_search(part.pseudo_illicit.begin(), part.pseudo_illicit.end(), a);
      std::snprintf(buf, sizeof buf, ",%.17g,", part.scores[i]);
      pseudo += a + buf + (flagged ? "pseudo_illicit" : "filtered_unknown") + '\n';
    }
    put("pseudo_labels.csv", pseudo);
    put("trial_log.csv", r.tuning.trial_log_csv());
    put("model.slens", trees::serialize_voting(r.primary().final_fit.model));
    put("curve.csv", r.primary().run.curve_csv());
    put("predictions.csv", r.predictions_csv());
    put("report.json", r.report.dump(2) + '\n');
    put("report.txt", r.report_text());
  });
  return r;
}

}  // namespace sleid::pipeline
