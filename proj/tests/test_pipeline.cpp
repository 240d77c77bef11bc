#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ditree/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ditree;

namespace {

const char* const kArtifacts[] = {"digraph.json", "tree_es.json",     "tree_os.json", "grid.csv",
                                  "omega.csv",    "coefficients.csv", "metrics.csv",  "smoothness.json"};

fs::path scratch(const std::string& name) {
  const auto info = ::testing::UnitTest::GetInstance()->current_test_info();
  const auto dir = fs::temp_directory_path() / "ditree_pipeline" / info->name() / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

RunConfig toy(const fs::path& out) {
  RunConfig c;
  c.synth = "toy25";
  c.target = "power:0.5";
  c.trials = 3;
  c.out = out;
  return c;
}

RunConfig planted(const fs::path& out) {
  RunConfig c;
  c.synth = "planted_partition";
  c.algorithm = Algorithm::kMBO;
  c.train_percent = 40;
  c.trials = 3;
  c.out = out;
  return c;
}

}  // namespace

TEST(Pipeline, ToyRunWritesEveryArtifact) {
  const auto c = toy(scratch("run"));
  run_pipeline(c);
  for (const char* name : kArtifacts) EXPECT_TRUE(fs::exists(c.out / name)) << name;
  EXPECT_EQ(csv_rows(c.out / "grid.csv").size(), 25u);
}

TEST(Pipeline, RerunIsByteIdentical) {
  auto a = toy(scratch("a"));
  auto b = toy(scratch("b"));
  b.jobs = 1;
  a.jobs = 3;
  run_pipeline(a);
  run_pipeline(b);
  for (const char* name : kArtifacts) EXPECT_EQ(slurp(a.out / name), slurp(b.out / name)) << name;
  EXPECT_EQ(slurp(a.out / "approx.csv"), slurp(b.out / "approx.csv"));
}

TEST(Pipeline, SeedChangesTheTrees) {
  auto a = toy(scratch("a"));
  auto b = toy(scratch("b"));
  b.seed = a.seed + 1;
  run_pipeline(a);
  run_pipeline(b);
  EXPECT_NE(slurp(a.out / "digraph.json"), slurp(b.out / "digraph.json"));
}

TEST(Pipeline, MboMetricsHaveBothMeasuresForLevelsOneAndTwo) {
  const auto c = planted(scratch("run"));
  run_pipeline(c);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : csv_rows(c.out / "metrics.csv")) {
    ASSERT_EQ(row.size(), 6u);
    EXPECT_EQ(row[5], "3");
    seen.insert({row[0], row[2]});
  }
  for (const char* level : {"1", "2"}) {
    EXPECT_TRUE(seen.count({level, "f_measure"})) << level;
    EXPECT_TRUE(seen.count({level, "modularity"})) << level;
  }
}

TEST(Pipeline, LabelApproximationRatiosAndExhaustion) {
  auto c = planted(scratch("run"));
  c.trials = 1;
  run_pipeline(c);
  const auto rows = approximation_report(c.out, c.weights);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    // sigma_n(f) lies in P_n, so it cannot beat the best approximation.
    if (r.ratio) EXPECT_GE(*r.ratio, 1.0 - 1e-9) << "n " << r.n;
    EXPECT_GE(r.sigma_error, r.best - 1e-9) << "n " << r.n;
    ASSERT_TRUE(r.rounded_mismatches.has_value());
  }
  EXPECT_EQ(rows.back().dimension, 100u);
  EXPECT_LE(rows.back().sigma_error, 1e-10);
  EXPECT_EQ(*rows.back().rounded_mismatches, 0u);
  EXPECT_EQ(csv_rows(c.out / "approx.csv").size(), rows.size());
}

TEST(Pipeline, PowerLawTargetReportsFittedExponent) {
  auto c = toy(scratch("run"));
  c.target = "power:0.8";
  run_pipeline(c);
  const auto j = nlohmann::json::parse(slurp(c.out / "smoothness.json"));
  EXPECT_EQ(j.at("target"), "power:0.8");
  ASSERT_TRUE(j.at("tau_norms").at("usable").get<bool>());
  EXPECT_NEAR(j.at("tau_norms").at("gamma").get<double>(), 0.8, 1e-9);
  EXPECT_TRUE(j.at("best_approx").contains("gamma"));
}

TEST(Pipeline, FileTargetMatchesSignalArtifact) {
  auto c = toy(scratch("run"));
  run_pipeline(c);
  const auto custom = c.out / "custom.csv";
  {
    std::ofstream out(custom);
    out << "value,name\n";
    for (int v = 0; v < 25; ++v) out << (v % 3) << "," << v << "\n";
  }
  c.target = "file:" + custom.string();
  stage_analyze(c);
  const auto rows = csv_rows(c.out / "signal.csv");
  ASSERT_EQ(rows.size(), 25u);
  for (const auto& r : rows) EXPECT_EQ(std::stod(r[2]), std::stoi(r[1]) % 3);
  const auto approx = approximation_report(c.out, c.weights, custom);
  ASSERT_TRUE(approx.back().rounded_mismatches.has_value());
}

TEST(Pipeline, StagesAreReentrant) {
  const auto c = toy(scratch("run"));
  run_pipeline(c);
  const auto grid = slurp(c.out / "grid.csv");
  const auto coef = slurp(c.out / "coefficients.csv");
  fs::remove(c.out / "grid.csv");
  fs::remove(c.out / "coefficients.csv");
  stage_grid(c);
  stage_analyze(c);
  EXPECT_EQ(slurp(c.out / "grid.csv"), grid);
  EXPECT_EQ(slurp(c.out / "coefficients.csv"), coef);
}

TEST(Pipeline, MissingArtifactIsAStructuredStageError) {
  const auto dir = scratch("empty");
  try {
    run_stage("approx", [&] { approximation_report(dir, WeightScheme::kUniformLeaves); });
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "approx");
    EXPECT_EQ(e.kind(), "MissingArtifact");
    EXPECT_EQ(e.exit_code(), 3);
    const auto j = nlohmann::json::parse(e.to_json());
    EXPECT_EQ(j.at("error").at("stage"), "approx");
  }
}

TEST(Pipeline, MboWithoutTrainingLabelsIsUnsupported) {
  auto c = toy(scratch("run"));
  c.algorithm = Algorithm::kMBO;
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "trees");
    EXPECT_EQ(e.kind(), "UnsupportedMode");
  }
}

TEST(Pipeline, LabelTargetNeedsLabels) {
  auto c = toy(scratch("run"));
  c.target = "labels";
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "analyze");
    EXPECT_EQ(e.kind(), "InvalidArgument");
  }
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.synth = "random_sparse";
  c.synth_params.n = 64;
  c.synth_params.density = 0.08;
  c.synth_params.block_sizes = {10, 20, 30};
  c.algorithm = Algorithm::kMLL;
  c.levels = LevelSpec{{3, 7, 11}};
  c.seed = 99;
  c.train_percent = 12.5;
  c.trials = 4;
  c.weights = WeightScheme::kVolumeLeaves;
  c.order = 2;
  c.target = "power:0.3";
  c.restarts = 5;
  c.labels = "l.txt";
  const auto text = config_to_json(c);
  const auto back = config_from_json(text);
  EXPECT_EQ(config_to_json(back), text);
  EXPECT_EQ(back.levels.counts, c.levels.counts);
  EXPECT_EQ(back.synth_params.block_sizes, c.synth_params.block_sizes);
  EXPECT_FALSE(back.edges.has_value());
  EXPECT_EQ(*back.labels, fs::path("l.txt"));
}

TEST(Config, OverridesKeepUnmentionedKeys) {
  RunConfig base;
  base.seed = 7;
  base.trials = 9;
  const auto c = config_from_json(R"({"trials": 2})", base);
  EXPECT_EQ(c.trials, 2u);
  EXPECT_EQ(c.seed, 7u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(config_from_json(R"({"trails": 3})"), InvalidArgument);
  EXPECT_THROW(config_from_json(R"({"trials": "x"})"), ParseError);
  EXPECT_THROW(config_from_json("[1]"), ParseError);
  EXPECT_THROW(config_from_json("{"), ParseError);
  RunConfig c;
  c.trials = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.train_percent = 100;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.partition = "smooth";
  EXPECT_THROW(c.validate(), UnsupportedMode);
  c = RunConfig{};
  c.levels = LevelSpec{{5, 5}};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.target = "degree";
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_NO_THROW(RunConfig{}.validate());
}

TEST(Labels, TopLevelClassesSortedByName) {
  std::vector<VertexRecord> v(5);
  v[0].label = "zeta/a";
  v[1].label = "alpha";
  v[2].label = "zeta/b";
  v[4].label = "alpha/x/y";
  const WeightedEdge e[] = {{0, 1, 1.0}};
  const WeightedDigraph w(v, e);
  EXPECT_EQ(vertex_classes(w), (VertexClasses{1, 0, 1, -1, 0}));
}

TEST(Labels, TrainingSubsetSizeAndDeterminism) {
  VertexClasses classes(40);
  for (int v = 0; v < 40; ++v) classes[v] = v % 7 == 0 ? -1 : v % 3;  // 34 labeled
  for (const double p : {0.0, 10.0, 40.0, 99.0}) {
    const auto t = training_labels(classes, p, 5);
    EXPECT_EQ(t, training_labels(classes, p, 5));
    std::size_t kept = 0;
    for (std::size_t v = 0; v < t.size(); ++v) {
      if (t[v] < 0) continue;
      ++kept;
      EXPECT_EQ(t[v], classes[v]);
    }
    EXPECT_EQ(kept, static_cast<std::size_t>(std::llround(p / 100.0 * 34))) << p;
  }
  EXPECT_NE(training_labels(classes, 40, 5), training_labels(classes, 40, 6));
}
