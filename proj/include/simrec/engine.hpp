#pragma once

#include "simrec/agents.hpp"
#include "simrec/common.hpp"
#include "simrec/metrics.hpp"
#include "simrec/models.hpp"
#include "simrec/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simrec {

enum class TrainingMode { single, repeated, never };

std::string_view to_string(TrainingMode mode);
TrainingMode parse_training_mode(std::string_view name);

struct CreatorConfig {
  bool enabled = false;
  Index num = 50;
  double creation_prob = 0.2;
  double item_concentration = 0.1;
  double learn_rate = 0.1;
  CreatorMode mode = CreatorMode::dirichlet_attrs;
  double profile_concentration = 10.0;
  bool weight_by_count = true;
};

struct SimulationConfig {
  Index num_users = 100;
  Index num_items = 1250;  ///< present before the first step
  Index num_attrs = 20;
  Index timesteps = 100;
  Index list_size = 10;
  Index startup_steps = 0;
  TrainingMode training = TrainingMode::repeated;
  /// Catalog items revealed at the start of every step (in addition to
  /// creator output).
  Index new_items_per_step = 0;
  bool repeat_interaction = false;
  double drift_weight = 0.0;
  double attention_decay = 0.9;
  bool attention_in_startup = true;
  /// New items stay interleaved until the model has been trained on them.
  bool persistent_interleave = false;
  ModelKind model = ModelKind::content;
  ModelParams model_params;
  /// Dirichlet concentration per attribute; 0 selects 10 / num_attrs.
  double user_concentration = 0.0;
  double item_concentration = 0.0;
  UtilityParams utility;
  CreatorConfig creators;
  std::vector<std::string> metrics{"jaccard", "mse"};
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Number of scheduled training events.
  Index training_events() const;
  bool trains_at(Timestep t) const;
};

/// Everything generated before the first step. Shared by every model run of
/// a trial so the runs differ only in the recommender.
struct Dataset {
  UserPool users;        ///< utilities cover every scheduled catalog item
  ItemCatalog items;     ///< initial plus scheduled items, created_at = reveal step
  std::optional<CreatorPool> creators;
};

Dataset generate_dataset(const SimulationConfig& config, const RngStream& rng);

struct SimulationState {
  Timestep t = 0;  ///< executed steps
  UserPool users;
  ItemCatalog items;  ///< only revealed items
  std::optional<CreatorPool> creators;
  RecommenderModel model;
  UserPairing pairing;
  std::vector<Interaction> log;
  bool active = true;
};

class Simulation {
 public:
  /// The dataset is copied; `rng` is the trial stream.
  Simulation(SimulationConfig config, const Dataset& dataset, const RngStream& rng);

  /// Executes one step. Returns false once the run is finished.
  bool step();
  void run();

  const SimulationConfig& config() const { return config_; }
  const SimulationState& state() const { return state_; }
  const MetricRegistry& metrics() const { return registry_; }
  MetricRegistry& metrics() { return registry_; }

 private:
  void reveal_items(Timestep t);
  void retrain(Timestep t);
  std::vector<ItemId> present(UserId user, Timestep t, bool startup, ItemId first_new) const;
  void apply_drift(UserId user, ItemId item);
  SimulationView view() const;

  SimulationConfig config_;
  RngStream rng_;
  ItemCatalog schedule_;  ///< every catalog item, revealed by created_at
  SimulationState state_;
  MetricRegistry registry_;
  bool baseline_done_ = false;
};

/// Inserts each new item at an independent uniform position, keeping the
/// relative order of `recommended`.
std::vector<ItemId> interleave(std::span<const ItemId> recommended, std::span<const ItemId> new_items,
                               RngStream& rng);

/// Position-weighted choice: argmax over rank r of utility[item] * decay^r,
/// ties to the earlier rank. Empty input gives nullopt.
std::optional<ItemId> select_interaction(std::span<const ItemId> presented,
                                         const Eigen::Ref<const VectorXd>& known_utility,
                                         double attention_decay);

struct RunResult {
  SimulationState state;
  std::map<std::string, TimeSeries> series;
};

/// Generates the dataset from the config seed (trial stream 0) and runs it.
RunResult run(const SimulationConfig& config);

/// |U| x n interaction counts restricted to items with id < n.
SparseMatrix<double> interaction_matrix(std::span<const Interaction> log, Index num_users, Index n);

}  // namespace simrec
