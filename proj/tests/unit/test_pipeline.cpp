#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sleid/common/error.hpp"
#include "sleid/isoforest/isoforest.hpp"
#include "sleid/pipeline/config.hpp"
#include "sleid/pipeline/pipeline.hpp"
#include "sleid/synthgen/synthgen.hpp"
#include "sleid/txgraph/graph.hpp"

using namespace sleid;
using namespace sleid::pipeline;

namespace {

struct World {
  synthgen::Scenario scenario;
  txgraph::LedgerGraph graph;
};

const World& world() {
  static const World w = [] {
    synthgen::ScenarioConfig c;
    c.seed = 21;
    c.n_accounts = 1500;
    c.illicit_fraction = 0.03;
    c.stealth = 0.5;
    World out{synthgen::generate(c), {}};
    out.graph = txgraph::ingest(out.scenario.records, {}, &out.scenario.observed);
    return out;
  }();
  return w;
}

PipelineConfig fast_config() {
  PipelineConfig c;
  c.seed = 5;
  c.workers = 1;
  c.tuner_budget = 2;
  c.space.rf_n_estimators = {10, 20};
  c.space.gbdt_n_estimators = {10, 20};
  c.space.rf_max_depth = {3, 6};
  c.space.gbdt_max_depth = {2, 3};
  c.rfe_target = 15;
  c.rfe_step = 0.3;
  c.rfe_trees = 15;
  c.iso_trees = 50;
  c.max_iters = 3;
  return c;
}

PipelineResult run(const PipelineConfig& c) {
  const auto& w = world();
  PipelineInputs in;
  in.graph = &w.graph;
  in.seeds = w.scenario.seeds();
  in.registry = &w.scenario.registry;
  in.labels = &w.scenario.observed;
  return run_pipeline(in, c);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing") {
    auto c = parse_config("[run]\nseed = 9\nmode = if_supervised\n[isoforest]\ncontamination = 0.01\n");
    CHECK(c.seed == 9);
    CHECK(c.mode == TrainingMode::kIfSupervised);
    CHECK(c.contamination == 0.01);
    try {
      parse_config("[run]\nseeed = 9\n");
      FAIL("unknown key accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBadConfig);
    }
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), Error);
    apply_override(c, "train.max_iters=2");
    CHECK(c.max_iters == 2);
    CHECK_THROWS_AS(apply_override(c, "train.max_iterz=2"), Error);
    auto out_of_range = c;
    apply_override(out_of_range, "isoforest.contamination=1.5");
    CHECK_THROWS_AS(out_of_range.validate(), Error);
    CHECK(parse_config(c.to_ini()).to_json() == c.to_json());
    const auto names = option_names();
    CHECK(std::set<std::string>(names.begin(), names.end()).count("tune.budget") == 1);
  }

  TEST_CASE("end to end run honours the training contract") {
    auto c = fast_config();
    auto r = run(c);
    const auto& m = r.primary();
    CHECK(m.mode == TrainingMode::kSleid);
    CHECK(m.run.folds.size() == 5);
    for (const auto& f : m.run.folds) {
      CHECK(f.iterations.size() >= 1);
      CHECK(f.iterations.size() <= 3u);
    }
    CHECK(m.run.pooled.counts.total() == r.split.labeled_rows.size());
    CHECK(r.pseudo.pseudo_illicit_rows.size() ==
          isoforest::contamination_count(r.split.unknown_rows.size(), c.contamination));
    CHECK(r.report.contains("expansion"));
    CHECK(r.report["modes"].size() == 1);
    CHECK_FALSE(r.report.contains("ablation"));
    CHECK_FALSE(r.report["config"]["run"].contains("workers"));
    CHECK(r.features.x.n_cols() == c.rfe_target);
    CHECK(r.report_text().find("weighted F1") != std::string::npos);
  }

  TEST_CASE("contamination sweep gives comparable reports") {
    std::vector<std::string> structure;
    for (double rate : {0.0025, 0.005, 0.01}) {
      auto c = fast_config();
      c.contamination = rate;
      auto r = run(c);
      CHECK(r.report["isoforest"]["pseudo_illicit"].get<std::size_t>() ==
            isoforest::contamination_count(r.split.unknown_rows.size(), rate));
      std::string keys;
      for (const auto& [k, v] : r.report.items()) keys += k + ',';
      structure.push_back(keys);
    }
    CHECK(structure[0] == structure[1]);
    CHECK(structure[1] == structure[2]);
  }

  TEST_CASE("ablation and reproducibility") {
    auto c = fast_config();
    c.ablation = true;
    auto a = run(c);
    REQUIRE(a.modes.size() == 3);
    CHECK(a.report["ablation"].size() == 3);
    std::set<TrainingMode> modes;
    for (const auto& m : a.modes) modes.insert(m.mode);
    CHECK(modes.size() == 3);
    c.workers = 2;
    auto b = run(c);
    CHECK(a.report.dump() == b.report.dump());
    CHECK(a.predictions_csv() == b.predictions_csv());
  }

  TEST_CASE("file driven run persists artifacts") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sleid_pipeline_test";
    fs::remove_all(dir);
    synthgen::write_scenario(world().scenario, (dir / "data").string());
    auto c = fast_config();
    c.records = (dir / "data" / "records.jsonl").string();
    c.labels = (dir / "data" / "labels.csv").string();
    c.registry = (dir / "data" / "registry.txt").string();
    c.out_dir = (dir / "out").string();
    auto r = run_pipeline(c);
    const std::vector<std::pair<const char*, std::string>> magics{
        {"graph.slgraph", "SLGRAPH\x01"}, {"features.slfeat", "SLFEAT\x01"}, {"isoforest.slif", "SLIF\x01"},
        {"model.slens", "SLENS\x01"}, {"preprocessor.bin", "SLPREP\x01"}};
    for (const auto& [name, magic] : magics) {
      CHECK_MESSAGE(slurp(dir / "out" / name).rfind(magic, 0) == 0, name);
    }
    for (const char* name : {"core.csv", "risk.csv", "trial_log.csv", "curve.csv", "predictions.csv", "report.json"}) {
      CHECK_MESSAGE(fs::exists(dir / "out" / name), name);
    }
    CHECK(r.report["graph"] == run(fast_config()).report["graph"]);
    c.records = (dir / "missing.jsonl").string();
    try {
      run_pipeline(c);
      FAIL("missing input accepted");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
    }
    fs::remove_all(dir);
  }
}
