#pragma once

#include "simrec/agents.hpp"
#include "simrec/common.hpp"
#include "simrec/models.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simrec {

struct MetricSample {
  Timestep timestep = 0;
  MatrixXd value;  ///< 1 x 1 for scalar measurements
};

class TimeSeries {
 public:
  explicit TimeSeries(std::string name = {}) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  const std::vector<MetricSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// Timesteps must be strictly increasing.
  void append(Timestep t, MatrixXd value);
  void append(Timestep t, double value);

  /// Scalar view; requires every sample to be 1 x 1.
  std::vector<double> values() const;
  std::vector<Timestep> timesteps() const;

 private:
  std::string name_;
  std::vector<MetricSample> samples_;
};

struct UserPairing {
  std::vector<std::pair<UserId, UserId>> pairs;
  /// Every user's best match was a tie across all candidates (e.g. identical
  /// predicted preferences), so the pairing only reflects the tie rule.
  bool degenerate = false;
};

/// Read-only snapshot handed to observers at the end of a step.
struct SimulationView {
  Timestep timestep = 0;
  const UserPool& users;
  const ItemCatalog& items;
  const RecommenderModel& model;
  const CreatorPool* creators = nullptr;
  const UserPairing& pairing;
};

/// A measurement or raw system-state recorder sampled once per executed step.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual std::string name() const = 0;
  virtual MatrixXd observe(const SimulationView& view) const = 0;
  /// Also sampled once before the first step, at timestep 0.
  virtual bool samples_baseline() const { return false; }
  /// Raw state (matrix recorded as-is) rather than a computed measurement.
  virtual bool is_system_state() const { return false; }
};

class MetricRegistry {
 public:
  /// Throws if an observer with the same name is already registered.
  void add(std::unique_ptr<Observer> observer);
  /// Stops sampling; recorded history is kept.
  bool remove(const std::string& name);
  bool is_registered(const std::string& name) const;

  void notify(const SimulationView& view);
  void notify_baseline(const SimulationView& view);

  const TimeSeries& series(const std::string& name) const;
  bool has_series(const std::string& name) const { return series_.count(name) > 0; }
  const std::map<std::string, TimeSeries>& all_series() const { return series_; }

 private:
  std::vector<std::unique_ptr<Observer>> observers_;
  std::map<std::string, TimeSeries> series_;
};

// ---------------------------------------------------------------------------
// Measurements

/// Pairs each user with the most cosine-similar other user under `repr`
/// (rows are users). Ties go to the lowest id.
UserPairing pair_users_by_similarity(const MatrixXd& repr);

double homogenization_jaccard(std::span<const std::pair<UserId, UserId>> pairs,
                              const std::vector<std::vector<ItemId>>& interacted);

/// Pointwise model - ideal; timesteps must match.
TimeSeries relative_homogenization(const TimeSeries& model, const TimeSeries& ideal);

double mse_scores(const MatrixXd& predicted, const MatrixXd& actual);

enum class CreatorEntropy { expected_item, dirichlet_differential };

double average_creator_entropy(const CreatorPool& creators,
                               CreatorEntropy kind = CreatorEntropy::expected_item);

/// Mean Euclidean distance, over all unordered pairs of users with at least
/// one interaction, between their mean consumed-item attribute vectors.
/// `excluded` (optional) receives the number of users without history.
double apdmci(const std::vector<std::vector<ItemId>>& interacted, const MatrixXd& item_attrs,
              std::size_t* excluded = nullptr);

/// Interaction log entry.
struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  Timestep t = 0;  ///< 0-based step index in which the interaction happened
};

/// Recomputes the homogenization series offline: for each recorded pairing
/// sample at timestep T (taken after T executed steps), the Jaccard average
/// over those pairs of the histories built from log entries with t < T.
TimeSeries replay_homogenization(const TimeSeries& pairs_state, std::span<const Interaction> log,
                                 Index num_users);

/// Pairing as a |U| x 2 matrix for state recording, and back.
MatrixXd pairs_to_matrix(const UserPairing& pairing);
std::vector<std::pair<UserId, UserId>> pairs_from_matrix(const MatrixXd& m);

// ---------------------------------------------------------------------------
// Built-in observers

std::unique_ptr<Observer> make_jaccard_observer();        ///< "jaccard"
std::unique_ptr<Observer> make_mse_observer();            ///< "mse"
std::unique_ptr<Observer> make_ace_observer(CreatorEntropy kind = CreatorEntropy::expected_item);  ///< "ace"
std::unique_ptr<Observer> make_apdmci_observer();         ///< "apdmci"
std::unique_ptr<Observer> make_pairs_state();             ///< "pairs"
std::unique_ptr<Observer> make_user_repr_state();         ///< "user_repr"
std::unique_ptr<Observer> make_creator_profiles_state();  ///< "creator_profiles"

/// Builds an observer by its registry name. Besides the names above:
/// "ace_dirichlet" (ACE from the Dirichlet differential entropy) and
/// "pairing_degenerate" (1 while the current pairing only reflects ties).
std::unique_ptr<Observer> make_observer(const std::string& name);

}  // namespace simrec
