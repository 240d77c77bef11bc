// ditree: twin-tree clustering and bivariate analysis of digraph signals.
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ditree/pipeline.hpp"

namespace {

using ditree::RunConfig;
using nlohmann::json;

enum class Kind { kText, kReal, kCount, kInt, kList };

struct Flag {
  const char* key;  // config key; the flag is --key with '_' as '-'
  Kind kind;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"edges", Kind::kText, "edge list (src dst [weight]), optionally gzipped"},
    {"labels", Kind::kText, "label file (name label/sublabel)"},
    {"synth", Kind::kText, "synthetic input when no edge list: planted_partition, random_sparse, toy25"},
    {"blocks", Kind::kList, "planted block sizes, comma separated"},
    {"p_in", Kind::kReal, "planted in-block edge probability"},
    {"p_out", Kind::kReal, "planted cross-block edge probability"},
    {"n", Kind::kCount, "random_sparse vertex count"},
    {"density", Kind::kReal, "random_sparse edge density"},
    {"algorithm", Kind::kText, "nhc, mll or mbo"},
    {"levels", Kind::kText, "cluster counts per level, coarsest first (e.g. 2,5)"},
    {"seed", Kind::kCount, "master seed"},
    {"train_percent", Kind::kReal, "percent of labeled vertices given to the clustering"},
    {"trials", Kind::kCount, "metric trials"},
    {"weights", Kind::kText, "leaf weights: uniform or volume"},
    {"partition", Kind::kText, "partition of unity (dyadic)"},
    {"order", Kind::kInt, "multiplier order r"},
    {"target", Kind::kText, "labels, power:<gamma> or file:<csv with name,value>"},
    {"restarts", Kind::kCount, "k-medoid restarts per level"},
    {"jobs", Kind::kCount, "concurrent trials (0 = all cores)"},
    {"out", Kind::kText, "run directory"},
};

json typed(const Flag& f, const std::string& raw) {
  switch (f.kind) {
    case Kind::kText: return raw;
    case Kind::kReal: return std::stod(raw);
    case Kind::kCount: return std::stoull(raw);
    case Kind::kInt: return std::stoi(raw);
    case Kind::kList: {
      json list = json::array();
      std::stringstream in(raw);
      for (std::string cell; std::getline(in, cell, ',');) list.push_back(std::stoull(cell));
      return list;
    }
  }
  return raw;
}

struct ConfigFlags {
  std::map<std::string, std::string> raw;
  std::string config_file;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON run config; flags override its keys");
    for (const auto& f : kFlags) {
      std::string name = std::string("--") + f.key;
      for (auto& ch : name) ch = ch == '_' ? '-' : ch;
      app->add_option(name, raw[f.key], f.help);
    }
  }

  RunConfig resolve(const CLI::App* app) const {
    RunConfig base;
    if (!config_file.empty()) base = ditree::config_from_json(ditree::read_text_file(config_file));
    json overrides = json::object();
    for (const auto& f : kFlags) {
      std::string name = std::string("--") + f.key;
      for (auto& ch : name) ch = ch == '_' ? '-' : ch;
      if (app->count(name) == 0) continue;
      try {
        overrides[f.key] = typed(f, raw.at(f.key));
      } catch (const std::logic_error&) {
        throw ditree::InvalidArgument("bad value for " + name + ": '" + raw.at(f.key) + "'");
      }
    }
    return ditree::config_from_json(overrides.dump(), base);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-tree clustering and bivariate analysis of digraph signals"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    ConfigFlags flags;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const std::string& name, const std::string& help) -> Sub& {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.flags.attach(s.app);
    return s;
  };
  add("ingest", "read an edge list into digraph.json");
  add("synth", "write a synthetic digraph.json");
  std::string side = "es";
  add("cluster", "build one tree (--side es|os) from digraph.json")
      .app->add_option("--side", side, "es or os")
      ->check(CLI::IsMember({"es", "os"}));
  add("trees", "build tree_es.json and tree_os.json");
  add("grid", "write grid.csv and omega.csv");
  add("analyze", "write signal.csv, coefficients.csv and smoothness.json");
  std::string signal;
  auto& approx = add("approx", "write approx.csv: E_n, sigma_n errors, ratios and tau_j norms (filter = --partition)");
  approx.app->add_option("--signal", signal, "CSV with name and value columns (default <out>/signal.csv)");
  add("metrics", "write metrics.csv averaged over trials");
  add("report", "write report.md and print it");
  add("pipeline", "run every stage");

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      RunConfig config;
      ditree::run_stage("config", [&] {
        config = sub.flags.resolve(sub.app);
        if (name != "report") config.validate();
      });
      if (name == "pipeline") {
        ditree::run_pipeline(config);
        return 0;
      }
      ditree::run_stage(name, [&] {
        if (name == "ingest" && !config.edges) throw ditree::InvalidArgument("ingest needs --edges");
        if (name == "ingest" || name == "synth") ditree::stage_ingest(config);
        else if (name == "cluster")
          ditree::stage_trees(config, side == "es" ? ditree::Symmetrization::kES : ditree::Symmetrization::kOS);
        else if (name == "trees") ditree::stage_trees(config);
        else if (name == "grid") ditree::stage_grid(config);
        else if (name == "analyze") ditree::stage_analyze(config);
        else if (name == "approx")
          ditree::stage_approx(config, signal.empty() ? std::nullopt : std::optional<std::filesystem::path>(signal));
        else if (name == "metrics") ditree::stage_metrics(config);
        else if (name == "report") std::cout << ditree::stage_report(config.out);
      });
    }
  } catch (const ditree::StageError& e) {
    std::cerr << e.to_json();
    return e.exit_code();
  }
  return 0;
}
