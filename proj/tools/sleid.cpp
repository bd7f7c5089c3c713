// sleid command line: every pipeline stage as a standalone command over
// persisted artifacts, plus `run` for the whole pipeline.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sleid/common/binio.hpp"
#include "sleid/common/error.hpp"
#include "sleid/common/stats.hpp"
#include "sleid/common/text.hpp"
#include "sleid/expand/expand.hpp"
#include "sleid/features/matrix.hpp"
#include "sleid/isoforest/isoforest.hpp"
#include "sleid/metrics/metrics.hpp"
#include "sleid/pipeline/config.hpp"
#include "sleid/pipeline/pipeline.hpp"
#include "sleid/riskrate/risk.hpp"
#include "sleid/synthgen/synthgen.hpp"
#include "sleid/trees/voting.hpp"
#include "sleid/txgraph/io.hpp"
#include "sleid/txgraph/labels.hpp"

namespace fs = std::filesystem;
using namespace sleid;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitStage = 4;

// Options shared by every stage command: an optional config file, repeated
// section.key=value overrides and the worker count.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = -1;
  long long seed = -1;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "INI configuration file");
    app->add_option("--set", overrides, "Override a config key (section.key=value)")->type_name("KEY=VALUE");
    app->add_option("-w,--workers", workers, "Worker threads (0 = all cores)");
    app->add_option("--seed", seed, "Master seed");
  }

  pipeline::PipelineConfig resolve() const {
    auto c = config_path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(config_path);
    for (const auto& o : overrides) pipeline::apply_override(c, o);
    if (workers >= 0) c.workers = workers;
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    c.validate();
    return c;
  }
};

void put(const fs::path& dir, const std::string& name, std::string_view bytes) {
  fs::create_directories(dir);
  write_file((dir / name).string(), bytes);
}

void emit(const std::string& out, std::string_view text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    if (auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_file(out, text);
  }
}

txgraph::LedgerGraph load(const std::string& path, const pipeline::PipelineConfig& c) {
  txgraph::IngestOptions io;
  io.drop_failed = c.drop_failed;
  return txgraph::load_graph(path, io);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  const std::string data = read_file(path);
  for (auto l : text::split_lines(data)) {
    l = text::trim(l);
    if (!l.empty()) out.emplace_back(l);
  }
  return out;
}

// address -> 0/1 from either a label book (address,label[,...]) or a truth
// file (address,label,archetype[,stealth]).
std::map<std::string, int> read_truth(const std::string& path) {
  std::map<std::string, int> out;
  const std::string data = read_file(path);
  const auto lines = text::split_lines(data);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto cells = text::split(lines[i], ',');
    if (cells.size() < 2) continue;
    auto addr = txgraph::normalize_address(text::trim(cells[0]));
    auto label = txgraph::parse_label(text::trim(cells[1]));
    if (!addr || !label) {
      if (i == 0) continue;  // header
      fail(ErrorCode::kParseError, path + ": line " + std::to_string(i + 1) + ": bad address or label");
    }
    if (*label == txgraph::Label::kUnknown) continue;
    out[*addr] = *label == txgraph::Label::kIllicit ? 1 : 0;
  }
  return out;
}

std::string curves_from_report(const ordered_json& report) {
  std::string out =
      "mode,fold,iteration,train_size,pool_before,admitted_licit,admitted_illicit,precision,recall,f1,accuracy,retained\n";
  char buf[320];
  for (const auto& m : report.at("modes")) {
    const std::string mode = m.at("mode").get<std::string>();
    for (const auto& f : m.at("training").at("folds")) {
      const int retained = f.at("retained_iteration").get<int>();
      for (const auto& it : f.at("iterations")) {
        const auto& v = it.at("validation");
        const int iter = it.at("iteration").get<int>();
        std::snprintf(buf, sizeof buf, ",%d,%d,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%d\n", f.at("fold").get<int>(),
                      iter, it.at("train_size").get<std::size_t>(), it.at("pool_before").get<std::size_t>(),
                      it.at("admitted_licit").get<std::size_t>(), it.at("admitted_illicit").get<std::size_t>(),
                      v.at("illicit").at("precision").get<double>(), v.at("illicit").at("recall").get<double>(),
                      v.at("illicit").at("f1").get<double>(), v.at("accuracy").get<double>(), iter == retained);
        out += mode + buf;
      }
    }
  }
  return out;
}

std::string table_from_report(const ordered_json& report) {
  std::vector<metrics::TableRow> rows;
  for (const auto& m : report.at("modes")) {
    const auto& p = m.at("pooled");
    rows.push_back({m.at("mode").get<std::string>(), p.at("illicit").at("precision").get<double>(),
                    p.at("illicit").at("recall").get<double>(), p.at("illicit").at("f1").get<double>(),
                    p.at("accuracy").get<double>()});
  }
  metrics::AblationTable t{rows};
  return t.to_text();
}

int run_main(int argc, char** argv) {
  CLI::App app{"Illicit account detection over Ethereum transaction graphs"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled ledger");
  synthgen::ScenarioConfig sc;
  std::string synth_out = "synth";
  bool synth_csv = false;
  synth->add_option("--seed", sc.seed, "Scenario seed");
  synth->add_option("--accounts", sc.n_accounts, "Number of accounts");
  synth->add_option("--illicit-fraction", sc.illicit_fraction, "Share of illicit accounts");
  synth->add_option("--stealth", sc.stealth, "How far illicit accounts blend in (0..1)");
  synth->add_option("--reveal-illicit", sc.reveal_illicit, "Share of illicit accounts published as labels");
  synth->add_option("--reveal-licit", sc.reveal_licit, "Share of licit accounts published as labels");
  synth->add_option("--reveal-bias", sc.reveal_bias, "Reporting bias towards blatant illicit accounts");
  synth->add_option("--horizon-days", sc.horizon_days, "Simulated time span");
  synth->add_flag("--csv", synth_csv, "Write records as CSV instead of JSONL");
  synth->add_option("-o,--out", synth_out, "Output directory");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse records into a ledger graph container");
  Common ingest_c;
  ingest_c.attach(ingest);
  std::string ingest_records, ingest_labels, ingest_out = "graph.slgraph";
  ingest->add_option("-r,--records", ingest_records, "Record file (.jsonl/.csv, optionally .gz)")->required();
  ingest->add_option("-l,--labels", ingest_labels, "Label CSV");
  ingest->add_option("-o,--out", ingest_out, "Output .slgraph path");

  // score
  auto* score = app.add_subcommand("score", "Risk-rate every account");
  Common score_c;
  score_c.attach(score);
  std::string score_graph, score_registry, score_out;
  score->add_option("-g,--graph", score_graph, "Graph container or record file")->required();
  score->add_option("--registry", score_registry, "DeFi registry file")->required();
  score->add_option("-o,--out", score_out, "Output CSV (default stdout)");

  // expand
  auto* expand_cmd = app.add_subcommand("expand", "Grow the core dataset around illicit seeds");
  Common expand_c;
  expand_c.attach(expand_cmd);
  std::string expand_graph, expand_seeds, expand_registry, expand_labels, expand_out;
  double expand_ratio = -1, expand_risk = -1;
  expand_cmd->add_option("-g,--graph", expand_graph, "Graph container or record file")->required();
  expand_cmd->add_option("--seeds", expand_seeds, "Seed address list")->required();
  expand_cmd->add_option("--registry", expand_registry, "DeFi registry file")->required();
  expand_cmd->add_option("-l,--labels", expand_labels, "Label CSV");
  expand_cmd->add_option("--ratio", expand_ratio, "Illicit ratio threshold");
  expand_cmd->add_option("--risk", expand_risk, "Risk threshold");
  expand_cmd->add_option("-o,--out", expand_out, "Output core CSV (default stdout)");

  // featurize
  auto* featurize_cmd = app.add_subcommand("featurize", "Extract, preprocess and select features for the core");
  Common feat_c;
  feat_c.attach(featurize_cmd);
  std::string feat_graph, feat_core, feat_out = "artifacts";
  featurize_cmd->add_option("-g,--graph", feat_graph, "Graph container or record file")->required();
  featurize_cmd->add_option("--core", feat_core, "Core CSV from expand")->required();
  featurize_cmd->add_option("-o,--out", feat_out, "Artifact directory");

  // train
  auto* train = app.add_subcommand("train", "Pseudo-label, tune and train with cross-validation");
  Common train_c;
  train_c.attach(train);
  std::string train_features, train_core, train_out = "artifacts";
  train->add_option("-f,--features", train_features, "Preprocessed feature container (.slfeat)")->required();
  train->add_option("--core", train_core, "Core CSV from expand")->required();
  train->add_option("-o,--out", train_out, "Artifact directory");

  // predict
  auto* predict = app.add_subcommand("predict", "Score accounts with a trained model");
  Common predict_c;
  predict_c.attach(predict);
  std::string pred_graph, pred_artifacts = "artifacts", pred_addresses, pred_out;
  predict->add_option("-g,--graph", pred_graph, "Graph container or record file")->required();
  predict->add_option("-a,--artifacts", pred_artifacts, "Directory with model.slens, preprocessor.bin, selected_columns.txt");
  predict->add_option("--addresses", pred_addresses, "Address list (default: every account)");
  predict->add_option("-o,--out", pred_out, "Output CSV (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare predictions with ground-truth labels");
  std::string eval_pred, eval_truth, eval_out;
  evaluate->add_option("-p,--predictions", eval_pred, "Predictions CSV (address,p_illicit,predicted,...)")->required();
  evaluate->add_option("-t,--truth", eval_truth, "Label or truth CSV")->required();
  evaluate->add_option("-o,--out", eval_out, "Write the JSON report here");

  // report
  auto* report = app.add_subcommand("report", "Render a run or training report");
  std::string rep_in, rep_curves, rep_format = "text";
  report->add_option("-i,--in", rep_in, "report.json from run or train")->required();
  report->add_option("--curves", rep_curves, "Write per-iteration curves CSV here");
  report->add_option("--format", rep_format, "text | json | csv")->check(CLI::IsMember({"text", "json", "csv"}));

  // run
  auto* run = app.add_subcommand("run", "Run the whole pipeline from a config file");
  Common run_c;
  run_c.attach(run);
  std::string run_out;
  bool run_ablation = false;
  run->add_option("-o,--out", run_out, "Artifact directory (overrides paths.out_dir)");
  run->add_flag("--ablation", run_ablation, "Also train the other two modes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (synth->parsed()) {
    sc.validate();
    auto s = synthgen::generate(sc);
    synthgen::write_scenario(s, synth_out, synth_csv);
    std::size_t illicit = 0;
    for (const auto& t : s.truth) illicit += t.label;
    std::cout << "wrote " << s.records.size() << " records, " << s.truth.size() << " accounts (" << illicit
              << " illicit, " << s.observed.size() << " published labels) to " << synth_out << '\n';
  } else if (ingest->parsed()) {
    auto c = ingest_c.resolve();
    txgraph::LabelBook labels;
    if (!ingest_labels.empty()) labels = txgraph::read_label_book(ingest_labels);
    txgraph::IngestOptions io;
    io.drop_failed = c.drop_failed;
    auto g = txgraph::load_graph(ingest_records, io, ingest_labels.empty() ? nullptr : &labels);
    emit(ingest_out, txgraph::serialize_graph(g));
    std::cerr << g.account_count() << " accounts, " << g.tx_count() << " transactions\n";
  } else if (score->parsed()) {
    auto c = score_c.resolve();
    auto g = load(score_graph, c);
    auto reg = riskrate::read_registry(score_registry);
    emit(score_out, riskrate::format_risk_csv(g, riskrate::score_all(g, reg, c.risk, c.workers)));
  } else if (expand_cmd->parsed()) {
    auto c = expand_c.resolve();
    if (expand_ratio >= 0) c.ratio_threshold = expand_ratio;
    if (expand_risk >= 0) c.risk.threshold = expand_risk;
    c.validate();
    txgraph::LabelBook labels;
    if (!expand_labels.empty()) labels = txgraph::read_label_book(expand_labels);
    auto g = load(expand_graph, c);
    auto reg = riskrate::read_registry(expand_registry);
    expand::ExpandParams ep;
    ep.ratio_threshold = c.ratio_threshold;
    ep.risk = c.risk;
    ep.max_layers = c.max_layers;
    ep.workers = c.workers;
    auto st = expand::expand_dataset(g, pipeline::parse_address_list(read_file(expand_seeds)), reg, ep,
                                     expand_labels.empty() ? nullptr : &labels);
    emit(expand_out, expand::format_core_csv(st));
    std::cerr << expand::status_name(st.status) << ": " << st.core.size() << " accounts after " << st.layer_index
              << " layers, illicit ratio " << st.illicit_ratio() << '\n';
  } else if (featurize_cmd->parsed()) {
    auto c = feat_c.resolve();
    auto g = load(feat_graph, c);
    auto core = pipeline::parse_core_csv(read_file(feat_core));
    auto f = pipeline::featurize(g, core, c);
    const fs::path dir(feat_out);
    put(dir, "features_raw.slfeat", features::serialize_matrix(f.raw));
    put(dir, "features.slfeat", features::serialize_matrix(f.x));
    put(dir, "schema.json", features::schema_manifest(f.x));
    put(dir, "preprocessor.bin", features::serialize_preprocessor(f.preprocessor));
    std::string sel;
    for (const auto& col : f.rfe.selected) sel += col + '\n';
    put(dir, "selected_columns.txt", sel);
    std::cerr << f.x.n_rows() << " rows, " << f.x.n_cols() << " of " << f.raw.n_cols() << " columns selected\n";
  } else if (train->parsed()) {
    auto c = train_c.resolve();
    auto x = features::deserialize_matrix(read_file(train_features));
    auto core = pipeline::parse_core_csv(read_file(train_core));
    if (core.size() != x.n_rows()) fail(ErrorCode::kSchemaError, "feature rows do not match the core");
    for (std::size_t i = 0; i < core.size(); ++i) {
      if (core[i].address != x.rows[i]) fail(ErrorCode::kSchemaError, "feature rows are not in core order");
    }
    auto split = pipeline::split_core(core);
    auto pseudo = pipeline::run_stage("isoforest", [&] { return pipeline::assign_pseudo_labels(x, split, c); });
    auto tuning = pipeline::run_stage("tune", [&] { return pipeline::tune_learners(x, split, pseudo, c); });
    selftrain::LearnerConfig learners{tuning.best_rf, tuning.best_gbdt};
    std::vector<pipeline::TrainingMode> modes{c.mode};
    if (c.ablation) {
      for (auto m : {pipeline::TrainingMode::kSupervisedOnly, pipeline::TrainingMode::kIfSupervised,
                     pipeline::TrainingMode::kSleid}) {
        if (m != c.mode) modes.push_back(m);
      }
    }
    std::vector<pipeline::ModeResult> results;
    pipeline::run_stage("train", [&] {
      for (auto m : modes) results.push_back(pipeline::train_mode(x, split, pseudo, learners, m, c));
    });
    ordered_json j;
    j["seed"] = c.seed;
    auto cfg = c.to_json();
    cfg["run"].erase("workers");
    cfg["paths"].erase("out_dir");
    j["config"] = cfg;
    auto mj = ordered_json::array();
    std::vector<metrics::TableRow> rows;
    for (const auto& m : results) {
      ordered_json e;
      e["mode"] = std::string(pipeline::mode_name(m.mode));
      e["pooled"] = metrics::to_json(m.run.pooled);
      e["modal_retained_iteration"] = m.run.modal_retained_iteration;
      e["training"] = m.run.to_json();
      mj.push_back(e);
      rows.push_back(metrics::TableRow::from_report(std::string(pipeline::mode_name(m.mode)), m.run.pooled));
    }
    j["modes"] = mj;
    if (rows.size() >= 2) j["ablation"] = metrics::ablation_table(rows).to_json();
    const fs::path dir(train_out);
    if (!pseudo.model.trees.empty()) put(dir, "isoforest.slif", isoforest::serialize_model(pseudo.model));
    put(dir, "trial_log.csv", tuning.trial_log_csv());
    put(dir, "model.slens", trees::serialize_voting(results.front().final_fit.model));
    put(dir, "curve.csv", results.front().run.curve_csv());
    put(dir, "report.json", j.dump(2) + '\n');
    std::cout << table_from_report(j);
  } else if (predict->parsed()) {
    auto c = predict_c.resolve();
    auto g = load(pred_graph, c);
    const fs::path dir(pred_artifacts);
    auto model = trees::deserialize_voting(read_file((dir / "model.slens").string()));
    auto pre = features::deserialize_preprocessor(read_file((dir / "preprocessor.bin").string()));
    auto selected = read_lines((dir / "selected_columns.txt").string());
    std::vector<std::string> addrs;
    if (pred_addresses.empty()) {
      for (std::size_t i = 0; i < g.account_count(); ++i) addrs.push_back(g.account(static_cast<txgraph::AccountId>(i)).address);
    } else {
      addrs = pipeline::parse_address_list(read_file(pred_addresses));
    }
    auto raw = features::build_matrix(g, addrs, c.workers);
    auto x = pipeline::transform(raw, pre, selected);
    const auto p = model.predict_p1(x, c.workers);
    std::string out = "address,p_illicit,predicted\n";
    char buf[64];
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g,%d\n", p[i], trees::vote_label(p[i]));
      out += x.rows[i] + buf;
    }
    emit(pred_out, out);
  } else if (evaluate->parsed()) {
    const auto truth = read_truth(eval_truth);
    std::vector<int> y, yhat;
    std::vector<double> score;
    const std::string pred_text = read_file(eval_pred);
    const auto lines = text::split_lines(pred_text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      auto cells = text::split(lines[i], ',');
      if (cells.size() < 3) fail(ErrorCode::kParseError, eval_pred + ": line " + std::to_string(i + 1) + ": expected address,p_illicit,predicted");
      auto it = truth.find(std::string(text::trim(cells[0])));
      if (it == truth.end()) continue;
      try {
        score.push_back(std::stod(std::string(text::trim(cells[1]))));
        yhat.push_back(std::stoi(std::string(text::trim(cells[2]))) ? 1 : 0);
      } catch (const std::exception&) {
        fail(ErrorCode::kParseError, eval_pred + ": line " + std::to_string(i + 1) + ": bad number");
      }
      y.push_back(it->second);
    }
    if (y.empty()) fail(ErrorCode::kEmptyInput, "no predicted address has a ground-truth label");
    auto r = metrics::classification_report(y, yhat);
    if (std::count(y.begin(), y.end(), 1) > 0) r.pr_auc = metrics::pr_auc(y, score);
    auto j = metrics::to_json(r);
    if (!eval_out.empty()) emit(eval_out, j.dump(2) + '\n');
    std::printf("evaluated %zu accounts\n", y.size());
    std::printf("illicit  precision %.4f  recall %.4f  F1 %.4f\n", r.illicit.precision, r.illicit.recall, r.illicit.f1);
    std::printf("accuracy %.4f  weighted F1 %.4f  MCC %.4f", r.accuracy, r.weighted_f1, r.mcc);
    if (r.pr_auc) std::printf("  PR-AUC %.4f", *r.pr_auc);
    std::printf("\n");
  } else if (report->parsed()) {
    ordered_json j;
    try {
      j = ordered_json::parse(read_file(rep_in));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParseError, rep_in + ": " + e.what());
    }
    if (!j.contains("modes")) fail(ErrorCode::kSchemaError, rep_in + ": no modes section");
    if (!rep_curves.empty()) emit(rep_curves, curves_from_report(j));
    if (rep_format == "json") {
      std::cout << (j.contains("ablation") ? j["ablation"] : j["modes"]).dump(2) << '\n';
    } else if (rep_format == "csv") {
      std::cout << curves_from_report(j);
    } else {
      std::cout << table_from_report(j);
    }
  } else if (run->parsed()) {
    auto c = run_c.resolve();
    if (!run_out.empty()) c.out_dir = run_out;
    if (run_ablation) c.ablation = true;
    auto r = pipeline::run_pipeline(c);
    std::cout << r.report_text();
    std::cout << "report digest " << hex64(fnv1a64(r.report.dump())) << ", artifacts in " << c.out_dir << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "] " << e.what() << '\n';
    switch (error_category(e.code())) {
      case ErrorCategory::kConfig: return kExitConfig;
      case ErrorCategory::kData: return kExitData;
      case ErrorCategory::kStage: return kExitStage;
    }
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
