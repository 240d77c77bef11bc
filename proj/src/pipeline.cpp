#include "ditree/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ditree/random.hpp"
#include "ditree/tree_basis.hpp"

namespace ditree {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Streams for mix_seed, distinct from the small ids twt uses per tree side.
constexpr std::uint64_t kTrainStream = 0x747261696eull;
constexpr std::uint64_t kSignalStream = 0x7369676e616cull;

std::string read_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact(path);
  return read_text_file(path);
}

void write_artifact(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string level_csv(const LevelSpec& k) {
  std::string s;
  for (const auto c : k.counts) s += (s.empty() ? "" : ",") + std::to_string(c);
  return s;
}

std::string weight_name(WeightScheme w) { return w == WeightScheme::kUniformLeaves ? "uniform" : "volume"; }

Filtration filtration_for(const ClusterTree& tree, const WeightedDigraph& w, WeightScheme scheme,
                          Symmetrization side) {
  const auto g = symmetrize(extend(w), side);
  return build_filtration(assign_weights(tree, scheme, &g));
}

// Everything downstream of the two trees, rebuilt from the artifacts.
struct Geometry {
  Geometry(WeightedDigraph graph, const Filtration& es, const Filtration& os)
      : w(std::move(graph)),
        grid(es, os),
        es_basis(es),
        os_basis(os),
        omega(compute_omega(grid, es_basis, os_basis)),
        g(default_partition(omega)),
        basis(gram_orthonormalize(grid, es_basis, os_basis, omega)) {}

  WeightedDigraph w;
  GridSet grid;
  GlobalBasis es_basis;
  GlobalBasis os_basis;
  FrequencySet omega;
  PartitionOfUnity g;
  TensorBasis basis;
};

Geometry load_geometry(const fs::path& out, WeightScheme scheme) {
  auto w = digraph_from_json(read_artifact(out / "digraph.json"));
  const auto es_tree = tree_from_json(read_artifact(out / "tree_es.json"));
  const auto os_tree = tree_from_json(read_artifact(out / "tree_os.json"));
  const auto es = filtration_for(es_tree, w, scheme, Symmetrization::kES);
  const auto os = filtration_for(os_tree, w, scheme, Symmetrization::kOS);
  return Geometry(std::move(w), es, os);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_number(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + text + "'", line);
  }
}

// CSV whose header names a "name" and a "value" column; every vertex must get
// exactly one value.
GridValues read_named_values(const std::string& text, const Geometry& geo) {
  GridValues f(geo.grid.size(), 0.0);
  std::vector<char> seen(geo.grid.size(), 0);
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t name_col = 0;
  std::size_t value_col = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (lineno == 1) {
      const auto name = std::find(cells.begin(), cells.end(), "name");
      const auto value = std::find(cells.begin(), cells.end(), "value");
      if (name == cells.end() || value == cells.end()) throw ParseError("header needs name and value columns", 1);
      name_col = static_cast<std::size_t>(name - cells.begin());
      value_col = static_cast<std::size_t>(value - cells.begin());
      width = std::max(name_col, value_col) + 1;
      continue;
    }
    if (cells.size() < width) throw ParseError("missing columns", lineno);
    const auto v = geo.w.find(cells[name_col]);
    if (!v) throw ParseError("unknown vertex '" + cells[name_col] + "'", lineno);
    const auto p = geo.grid.index_of(*v);
    if (seen[p]) throw ParseError("duplicate vertex '" + cells[name_col] + "'", lineno);
    seen[p] = 1;
    f[p] = parse_number(cells[value_col], lineno);
  }
  if (lineno == 0) throw ParseError("empty signal file", 0);
  if (std::count(seen.begin(), seen.end(), 0)) throw InvalidArgument("signal does not cover every vertex");
  return f;
}

GridValues target_signal(const RunConfig& config, const Geometry& geo) {
  const auto& t = config.target;
  if (t == "labels") {
    const auto classes = vertex_classes(geo.w);
    GridValues f(geo.grid.size());
    for (const auto& p : geo.grid.points()) {
      if (classes[p.vertex] < 0) throw InvalidArgument("target 'labels' needs every vertex labeled");
      f[geo.grid.index_of(p.vertex)] = classes[p.vertex];
    }
    return f;
  }
  if (t.rfind("power:", 0) == 0) {
    Rng rng(mix_seed(config.seed, kSignalStream));
    return power_law_signal(geo.basis, parse_number(t.substr(6), 0), rng);
  }
  if (t.rfind("file:", 0) == 0) return read_named_values(read_artifact(t.substr(5)), geo);
  throw InvalidArgument("unknown target '" + t + "'");
}

std::string signal_csv(const Geometry& geo, const GridValues& f) {
  std::string s = "vertex,name,value\n";
  char buf[64];
  for (std::size_t p = 0; p < geo.grid.size(); ++p) {
    const auto v = geo.grid.points()[p].vertex;
    std::snprintf(buf, sizeof buf, ",%.17g\n", f[p]);
    s += std::to_string(v) + "," + geo.w.vertex(v).name + buf;
  }
  return s;
}

std::string omega_csv(const FrequencySet& omega) {
  std::string s = "k1,k2,shell\n";
  for (const auto& k : omega.indices()) {
    s += std::to_string(k.k1) + "," + std::to_string(k.k2) + "," + std::to_string(shell(k)) + "\n";
  }
  return s;
}

bool integer_valued(const GridValues& f) {
  return std::all_of(f.begin(), f.end(), [](double x) { return std::isfinite(x) && x == std::round(x); });
}

TwinTrees trial_trees(const RunConfig& config, const WeightedDigraph& w, const VertexClasses& classes,
                      std::size_t trial) {
  const auto seed = trial_seed(config.seed, trial);
  const auto train = training_labels(classes, config.train_percent, mix_seed(seed, kTrainStream));
  const bool any = std::any_of(train.begin(), train.end(), [](int c) { return c >= 0; });
  if (config.algorithm == Algorithm::kMBO && !any) {
    throw UnsupportedMode("MBO needs labeled training vertices (labels and train_percent > 0)");
  }
  return twt(w, config.twt_options(seed), any ? &train : nullptr);
}

std::vector<LevelScore> run_trial(const RunConfig& config, const WeightedDigraph& w, const VertexClasses& classes,
                                  bool fully_labeled, std::size_t trial) {
  const auto trees = trial_trees(config, w, classes, trial);
  return align_and_score(trees.es, trees.os, w, fully_labeled ? &classes : nullptr);
}

}  // namespace

std::string StageError::to_json() const {
  return json{{"error", {{"stage", stage_}, {"kind", kind_}, {"message", what()}}}}.dump() + "\n";
}

namespace detail {

void rethrow_as_stage(std::string_view stage) {
  const std::string s(stage);
  try {
    throw;
  } catch (const MissingArtifact& e) {
    throw StageError(s, "MissingArtifact", e.what(), 3);
  } catch (const ParseError& e) {
    throw StageError(s, "ParseError", e.what(), 2);
  } catch (const InvalidArgument& e) {
    throw StageError(s, "InvalidArgument", e.what(), 2);
  } catch (const UnsupportedMode& e) {
    throw StageError(s, "UnsupportedMode", e.what(), 4);
  } catch (const ConvergenceError& e) {
    throw StageError(s, "ConvergenceError", e.what(), 5);
  } catch (const Error& e) {
    throw StageError(s, "Error", e.what(), 1);
  } catch (const std::exception& e) {
    throw StageError(s, "internal", e.what(), 1);
  }
}

}  // namespace detail

void RunConfig::validate() const {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (!(train_percent >= 0.0 && train_percent < 100.0)) throw InvalidArgument("train percent must lie in [0, 100)");
  if (order < 1) throw InvalidArgument("multiplier order must be at least 1");
  if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
  if (levels.counts.empty()) throw InvalidArgument("at least one level is required");
  for (std::size_t l = 0; l < levels.counts.size(); ++l) {
    if (levels.counts[l] < 2 || (l > 0 && levels.counts[l] <= levels.counts[l - 1])) {
      throw InvalidArgument("levels must increase strictly from at least 2");
    }
  }
  if (partition != "dyadic") throw UnsupportedMode("only the dyadic partition of unity is implemented");
  if (target != "labels" && target.rfind("power:", 0) != 0 && target.rfind("file:", 0) != 0) {
    throw InvalidArgument("target must be labels, power:<gamma> or file:<csv>");
  }
  if (!edges) parse_synth_kind(synth);
}

TwtOptions RunConfig::twt_options(std::uint64_t s) const {
  TwtOptions o;
  o.algorithm = algorithm;
  o.levels = levels;
  o.seed = s;
  o.nhc.restarts = restarts;
  o.mll.restarts = restarts;
  return o;
}

RunConfig config_from_json(std::string_view text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "edges") c.edges = v.is_null() ? std::nullopt : std::optional<fs::path>(v.get<std::string>());
      else if (key == "labels") c.labels = v.is_null() ? std::nullopt : std::optional<fs::path>(v.get<std::string>());
      else if (key == "synth") c.synth = v.get<std::string>();
      else if (key == "blocks") c.synth_params.block_sizes = v.get<std::vector<std::size_t>>();
      else if (key == "p_in") c.synth_params.p_in = v.get<double>();
      else if (key == "p_out") c.synth_params.p_out = v.get<double>();
      else if (key == "n") c.synth_params.n = v.get<std::size_t>();
      else if (key == "density") c.synth_params.density = v.get<double>();
      else if (key == "algorithm") c.algorithm = parse_algorithm(v.get<std::string>());
      else if (key == "levels") c.levels = LevelSpec::parse(v.get<std::string>());
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "train_percent") c.train_percent = v.get<double>();
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "weights") c.weights = parse_weight_scheme(v.get<std::string>());
      else if (key == "partition") c.partition = v.get<std::string>();
      else if (key == "order") c.order = v.get<int>();
      else if (key == "target") c.target = v.get<std::string>();
      else if (key == "restarts") c.restarts = v.get<std::size_t>();
      else if (key == "jobs") c.jobs = v.get<std::size_t>();
      else if (key == "out") c.out = v.get<std::string>();
      else throw InvalidArgument("unknown config key '" + key + "'");
    }
  } catch (const json::type_error& e) {
    throw ParseError(e.what(), 0);
  }
  return c;
}

std::string config_to_json(const RunConfig& c) {
  // jobs and out are left out: they change neither the results nor the bytes.
  json j{{"synth", c.synth},
         {"blocks", c.synth_params.block_sizes},
         {"p_in", c.synth_params.p_in},
         {"p_out", c.synth_params.p_out},
         {"n", c.synth_params.n},
         {"density", c.synth_params.density},
         {"algorithm", std::string(algorithm_name(c.algorithm))},
         {"levels", level_csv(c.levels)},
         {"seed", c.seed},
         {"train_percent", c.train_percent},
         {"trials", c.trials},
         {"weights", weight_name(c.weights)},
         {"partition", c.partition},
         {"order", c.order},
         {"target", c.target},
         {"restarts", c.restarts}};
  j["edges"] = c.edges ? json(c.edges->string()) : json(nullptr);
  j["labels"] = c.labels ? json(c.labels->string()) : json(nullptr);
  return j.dump(2) + "\n";
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) { return mix_seed(master, trial); }

VertexClasses vertex_classes(const WeightedDigraph& w) {
  std::map<std::string, int> ids;
  std::vector<std::string> top(w.size());
  for (std::size_t v = 0; v < w.size(); ++v) {
    const auto& label = w.vertex(v).label;
    top[v] = label.substr(0, label.find('/'));
    if (!top[v].empty()) ids.emplace(top[v], 0);
  }
  int next = 0;
  for (auto& [name, id] : ids) id = next++;
  VertexClasses c(w.size(), -1);
  for (std::size_t v = 0; v < w.size(); ++v) {
    if (!top[v].empty()) c[v] = ids.at(top[v]);
  }
  return c;
}

VertexClasses training_labels(const VertexClasses& classes, double percent, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t v = 0; v < classes.size(); ++v) {
    if (classes[v] >= 0) labeled.push_back(v);
  }
  Rng rng(seed);
  rng.shuffle(labeled);
  const auto keep = static_cast<std::size_t>(std::llround(percent / 100.0 * static_cast<double>(labeled.size())));
  VertexClasses out(classes.size(), -1);
  for (std::size_t i = 0; i < std::min(keep, labeled.size()); ++i) out[labeled[i]] = classes[labeled[i]];
  return out;
}

void stage_ingest(const RunConfig& config) {
  const auto w = config.edges ? load_edge_list_file(*config.edges, config.labels)
                              : synth_digraph(parse_synth_kind(config.synth), config.synth_params, config.seed);
  write_artifact(config.out / "digraph.json", digraph_to_json(w));
}

void stage_trees(const RunConfig& config, std::optional<Symmetrization> side) {
  const auto w = digraph_from_json(read_artifact(config.out / "digraph.json"));
  const auto trees = trial_trees(config, w, vertex_classes(w), 0);
  if (!side || *side == Symmetrization::kES) write_artifact(config.out / "tree_es.json", tree_to_json(trees.es));
  if (!side || *side == Symmetrization::kOS) write_artifact(config.out / "tree_os.json", tree_to_json(trees.os));
}

void stage_grid(const RunConfig& config) {
  const auto geo = load_geometry(config.out, config.weights);
  write_artifact(config.out / "grid.csv", geo.grid.to_csv());
  write_artifact(config.out / "omega.csv", omega_csv(geo.omega));
}

void stage_analyze(const RunConfig& config) {
  const auto geo = load_geometry(config.out, config.weights);
  const auto f = target_signal(config, geo);
  const auto mu = default_multiplier(geo.g, config.order);
  const auto report = smoothness_profile(geo.grid, geo.es_basis, geo.os_basis, geo.basis, geo.g, mu, f);
  auto j = json::parse(smoothness_to_json(report));
  j["target"] = config.target;
  j["order"] = config.order;
  j["basis_size"] = geo.basis.size();
  j["omega_size"] = geo.omega.size();
  write_artifact(config.out / "signal.csv", signal_csv(geo, f));
  write_artifact(config.out / "coefficients.csv", tensor_coefficients_csv(geo.basis, geo.basis.analyze(f)));
  write_artifact(config.out / "smoothness.json", j.dump(2) + "\n");
}

void stage_metrics(const RunConfig& config) {
  const auto w = digraph_from_json(read_artifact(config.out / "digraph.json"));
  const auto classes = vertex_classes(w);
  const bool fully_labeled = std::none_of(classes.begin(), classes.end(), [](int c) { return c < 0; });
  std::vector<std::vector<LevelScore>> scores(config.trials);
  std::vector<std::exception_ptr> errors(config.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next++) < config.trials;) {
      try {
        scores[t] = run_trial(config, w, classes, fully_labeled, t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
  const std::size_t jobs = std::min(config.jobs ? config.jobs : hw, config.trials);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  // Report the failure of the earliest trial so the error is deterministic too.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  write_artifact(config.out / "metrics.csv", metrics_csv(summarize_trials(scores)));
}

std::vector<ApproxRow> approximation_report(const fs::path& out, WeightScheme weights,
                                            const std::optional<fs::path>& signal, std::string_view filter) {
  if (filter != "dyadic") throw UnsupportedMode("only the dyadic filter is implemented");
  if (!fs::exists(out / "coefficients.csv")) throw MissingArtifact(out / "coefficients.csv");
  const auto geo = load_geometry(out, weights);
  const auto f = read_named_values(read_artifact(signal.value_or(out / "signal.csv")), geo);
  const double fnorm = sup_norm(f, geo.grid);
  const bool integral = integer_valued(f);
  std::vector<ApproxRow> rows;
  for (int n = 0; n <= geo.omega.max_shell(); ++n) {
    ApproxRow r;
    r.n = n;
    const auto e = degree_of_approximation(geo.grid, geo.es_basis, geo.os_basis, geo.g, f, n);
    r.dimension = e.dimension;
    r.best = e.value;
    const auto st = sigma_tau(geo.basis, geo.g, f, n);
    GridValues diff(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) diff[p] = f[p] - st.sigma[p];
    r.sigma_error = sup_norm(diff, geo.grid);
    if (r.best > 1e-12 * std::max(fnorm, 1.0)) r.ratio = r.sigma_error / r.best;
    r.tau_norm = sup_norm(st.tau.back(), geo.grid);
    if (integral) {
      std::size_t miss = 0;
      for (std::size_t p = 0; p < f.size(); ++p) miss += std::round(st.sigma[p]) != f[p];
      r.rounded_mismatches = miss;
    }
    rows.push_back(r);
  }
  return rows;
}

std::string approx_csv(const std::vector<ApproxRow>& rows) {
  std::string s = "n,dimension,best_approx,sigma_error,ratio,tau_norm,rounded_mismatches\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,", r.n, r.dimension, r.best, r.sigma_error);
    s += buf;
    if (r.ratio) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.ratio);
      s += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,", r.tau_norm);
    s += buf;
    if (r.rounded_mismatches) s += std::to_string(*r.rounded_mismatches);
    s += "\n";
  }
  return s;
}

void stage_approx(const RunConfig& config, const std::optional<fs::path>& signal) {
  write_artifact(config.out / "approx.csv",
                 approx_csv(approximation_report(config.out, config.weights, signal, config.partition)));
}

std::string stage_report(const fs::path& out) {
  const auto w = digraph_from_json(read_artifact(out / "digraph.json"));
  const auto es = tree_from_json(read_artifact(out / "tree_es.json"));
  const auto os = tree_from_json(read_artifact(out / "tree_os.json"));
  const auto smooth = json::parse(read_artifact(out / "smoothness.json"));
  std::ostringstream r;
  r << "# Run report\n\n";
  r << "- vertices: " << w.size() << "\n- edges: " << w.num_edges() << "\n";
  r << "- tree depth: ES " << es.depth() << ", OS " << os.depth() << "\n";
  r << "- |Omega|: " << smooth.value("omega_size", 0) << ", basis size: " << smooth.value("basis_size", 0) << "\n";
  r << "- target: " << smooth.value("target", std::string("?")) << "\n\n";
  r << "## Smoothness\n\n| sequence | gamma | terms | usable |\n|---|---|---|---|\n";
  for (const char* key : {"best_approx", "tau_norms", "sigma_errors", "k_functional"}) {
    const auto& d = smooth.at(key);
    r << "| " << key << " | " << d.at("gamma").get<double>() << " | " << d.at("used").get<std::size_t>() << " | "
      << (d.at("usable").get<bool>() ? "yes" : "no") << " |\n";
  }
  r << "\nspread " << smooth.at("spread").get<double>()
    << (smooth.at("insufficient_resolution").get<bool>() ? ", insufficient resolution" : "")
    << (smooth.at("finite_band").get<bool>() ? ", finite band" : "") << "\n";
  for (const char* name : {"metrics.csv", "approx.csv"}) {
    if (!fs::exists(out / name)) continue;
    r << "\n## " << name << "\n\n```\n" << read_artifact(out / name) << "```\n";
  }
  const auto text = r.str();
  write_artifact(out / "report.md", text);
  return text;
}

void run_pipeline(const RunConfig& config) {
  run_stage("config", [&] {
    config.validate();
    write_artifact(config.out / "config.json", config_to_json(config));
  });
  run_stage("ingest", [&] { stage_ingest(config); });
  run_stage("trees", [&] { stage_trees(config); });
  run_stage("grid", [&] { stage_grid(config); });
  run_stage("analyze", [&] { stage_analyze(config); });
  run_stage("metrics", [&] { stage_metrics(config); });
  run_stage("approx", [&] { stage_approx(config); });
  run_stage("report", [&] { stage_report(config.out); });
}

}  // namespace ditree
