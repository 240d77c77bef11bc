#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ditree/analysis.hpp"
#include "ditree/clustering.hpp"
#include "ditree/digraph.hpp"
#include "ditree/error.hpp"
#include "ditree/filtration.hpp"
#include "ditree/metrics.hpp"

namespace ditree {

/// A pipeline stage expected an artifact that is not in the run directory.
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::filesystem::path& path)
      : Error("missing artifact " + path.string()), path_(path) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Wraps the failure of one stage; `kind` names the underlying error class.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string kind, const std::string& message, int exit_code)
      : Error(message), stage_(std::move(stage)), kind_(std::move(kind)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_; }
  /// {"error": {"stage", "kind", "message"}}.
  std::string to_json() const;

 private:
  std::string stage_;
  std::string kind_;
  int exit_code_;
};

struct RunConfig {
  std::optional<std::filesystem::path> edges;   // edge list; synthetic input when absent
  std::optional<std::filesystem::path> labels;
  std::string synth = "toy25";
  SynthParams synth_params;
  Algorithm algorithm = Algorithm::kNHC;
  LevelSpec levels{{2, 5}};
  std::uint64_t seed = 1;
  double train_percent = 0.0;  // p: labeled share handed to the clustering, in [0, 100)
  std::size_t trials = 30;
  WeightScheme weights = WeightScheme::kUniformLeaves;
  std::string partition = "dyadic";
  int order = 1;                  // multiplier order r
  std::string target = "labels";  // labels | power:<gamma> | file:<csv with name,value columns>
  std::size_t restarts = 1;       // k-medoid restarts for NHC and MLL
  std::size_t jobs = 0;           // concurrent trials; 0 = hardware concurrency
  std::filesystem::path out = "run";

  /// Throws InvalidArgument on a broken invariant.
  void validate() const;
  TwtOptions twt_options(std::uint64_t seed) const;
};

/// Keys mirror the CLI flags with '_' for '-'; absent keys keep their defaults.
RunConfig config_from_json(std::string_view text, RunConfig base = {});
std::string config_to_json(const RunConfig& config);

/// Per-trial child seed; trial 0 also produces the tree artifacts.
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);

/// Dense top-level class per vertex ("a/b" counts as "a", classes sorted by
/// name); -1 when unlabeled.
VertexClasses vertex_classes(const WeightedDigraph& w);
/// Keeps round(p% of the labeled vertices), chosen by `seed`; the rest become -1.
VertexClasses training_labels(const VertexClasses& classes, double percent, std::uint64_t seed);

// Stages. Each reads its inputs from and writes its outputs to config.out.

/// digraph.json from the edge list or the synthetic generator.
void stage_ingest(const RunConfig& config);
/// tree_es.json and tree_os.json (trial 0). `side` limits the output to one tree.
void stage_trees(const RunConfig& config, std::optional<Symmetrization> side = std::nullopt);
/// grid.csv and omega.csv.
void stage_grid(const RunConfig& config);
/// signal.csv, coefficients.csv and smoothness.json on the exact basis.
void stage_analyze(const RunConfig& config);
/// metrics.csv averaged over the configured trials.
void stage_metrics(const RunConfig& config);

struct ApproxRow {
  int n = 0;
  std::size_t dimension = 0;  // dim P_n
  double best = 0.0;          // E_n(f)
  double sigma_error = 0.0;   // ||f - sigma_n(f)||
  std::optional<double> ratio;  // sigma_error / E_n; absent when E_n vanishes
  double tau_norm = 0.0;      // ||tau_n(f)||
  std::optional<std::size_t> rounded_mismatches;  // integer-valued f: vertices where round(sigma_n) != f
};

/// Rows n = 0..max shell. `signal` defaults to <out>/signal.csv and `filter`
/// names the partition of unity (only "dyadic"). Needs coefficients.csv from
/// a prior analyze stage.
std::vector<ApproxRow> approximation_report(const std::filesystem::path& out, WeightScheme weights,
                                            const std::optional<std::filesystem::path>& signal = std::nullopt,
                                            std::string_view filter = "dyadic");
std::string approx_csv(const std::vector<ApproxRow>& rows);
/// approx.csv from approximation_report.
void stage_approx(const RunConfig& config, const std::optional<std::filesystem::path>& signal = std::nullopt);

/// report.md summarizing the other artifacts; returns its text.
std::string stage_report(const std::filesystem::path& out);

/// config.json then every stage in order. Stage failures surface as StageError.
void run_pipeline(const RunConfig& config);

namespace detail {
[[noreturn]] void rethrow_as_stage(std::string_view stage);
}

/// Runs `body` and rethrows any failure as a StageError tagged `stage`.
template <class F>
void run_stage(std::string_view stage, F&& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (...) {
    detail::rethrow_as_stage(stage);
  }
}

}  // namespace ditree
