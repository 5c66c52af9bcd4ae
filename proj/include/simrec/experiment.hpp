#pragma once

#include "simrec/diffusion.hpp"
#include "simrec/engine.hpp"
#include "simrec/serialize.hpp"

#include <optional>
#include <string>
#include <vector>

namespace simrec {

enum class Preset { chaney_single, chaney_repeated, goel, creators, custom };

std::string_view to_string(Preset preset);
Preset parse_preset(std::string_view name);

struct DiffusionConfig {
  NodeId nodes = 100000;
  std::vector<double> alphas{2.1, 2.3, 2.5, 2.7, 2.9};
  std::vector<double> rs{0.1, 0.3, 0.5, 0.7, 0.9};
  int graphs_per_alpha = 5;
  std::int64_t cascades = 200000;  ///< per (alpha, r) cell
  std::int64_t threshold = 100;
  /// Follower-style directed graphs; see build_graph.
  bool directed = true;
};

struct ExperimentConfig {
  Preset preset = Preset::custom;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  int workers = 0;  ///< 0: SIMREC_WORKERS, else hardware concurrency
  std::string out;  ///< empty: keep the bundle in memory only
  SimulationConfig simulation;
  /// Run over one shared dataset per trial. With "ideal" present it runs
  /// first and relative homogenization is reported for the others.
  std::vector<ModelKind> models{ModelKind::content};
  DiffusionConfig diffusion;
};

ExperimentConfig preset_config(Preset preset);

Json config_to_json(const ExperimentConfig& config);
/// Starts from the defaults of the "preset" key (custom when absent) and
/// applies every other key. Unknown keys and bad values throw ConfigError
/// naming the key path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig parse_config_file(const std::string& path);

/// Applies "path.to.key=value" to a config JSON. The value is read as JSON
/// when possible and as a string otherwise. A key that is not top-level but
/// names a simulation field is taken to mean simulation.<key>.
void apply_override(Json& config, const std::string& assignment);

int resolve_workers(int requested);

struct MetricRow {
  Timestep timestep = 0;
  std::string metric;
  double value = 0.0;
};

struct TrialResult {
  std::int64_t trial = 0;
  std::vector<MetricRow> rows;  ///< grouped by metric, ascending timestep
};

struct CascadeCell {
  double alpha = 0.0;
  double r = 0.0;
  std::vector<double> mean_degrees;
  CascadeStats stats;
};

struct ResultBundle {
  Json config;
  std::vector<TrialResult> trials;
  Json aggregate;
  std::vector<CascadeCell> cascades;  ///< goel preset only
};

/// CSV text for one trial: header trial,timestep,metric,value.
std::string trial_csv(const TrialResult& trial);
/// Mean and sample SD across trials per (metric, timestep).
Json aggregate_trials(const std::vector<TrialResult>& trials);
/// Per-cell cascade summary.
Json cascade_summary(const std::vector<CascadeCell>& cells);
/// Popular cascades of one cell: header trial,size,virality.
std::string cascade_csv(const CascadeCell& cell);

/// One simulation trial: every configured model over a shared dataset.
TrialResult run_simulation_trial(const ExperimentConfig& config, std::int64_t trial);

/// Runs the experiment. When config.out is set, the bundle is written to a
/// temporary sibling directory that is renamed into place on success.
ResultBundle run_experiment(const ExperimentConfig& config);

void write_bundle(const ResultBundle& bundle, const std::string& out);

}  // namespace simrec
