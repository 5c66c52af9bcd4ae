#pragma once

#include "simrec/common.hpp"
#include "simrec/rng.hpp"

#include <optional>
#include <span>
#include <vector>

namespace simrec {

/// Users: true preferences, the utility they would draw from each item, the
/// part of it they can anticipate, and what they have already consumed.
struct UserPool {
  MatrixXd actual_prefs;    ///< |U| x A
  MatrixXd true_utility;    ///< |U| x |I|
  MatrixXd known_utility;   ///< |U| x |I|, known = true * known_fraction
  MatrixXd known_fraction;  ///< |U| x |I|, each entry in [0, 1]
  std::vector<std::vector<ItemId>> interacted;  ///< sorted, duplicate-free per user
  double drift_weight = 0.0;
  double attention_decay = 0.9;

  Index size() const { return actual_prefs.rows(); }
  Index num_attrs() const { return actual_prefs.cols(); }
  bool has_interacted(UserId user, ItemId item) const;
  /// Returns false when the item was already in the user's history.
  bool record_interaction(UserId user, ItemId item);
};

/// Item attribute columns in creation order; ids are column indices.
struct ItemCatalog {
  MatrixXd attributes;  ///< A x |I|
  std::vector<Timestep> created_at;
  std::vector<std::int64_t> interaction_counts;
  std::vector<std::int64_t> creator;  ///< producing creator, -1 for catalog items

  Index size() const { return attributes.cols(); }
  Index num_attrs() const { return attributes.rows(); }
  /// Appends columns, returning the id of the first new item.
  ItemId append(const MatrixXd& columns, Timestep t, std::span<const std::int64_t> creators = {});
};

enum class CreatorMode { bernoulli_attrs, dirichlet_attrs };

struct CreatorPool {
  MatrixXd profiles;  ///< |C| x A, rows on the simplex
  double creation_prob = 0.2;
  double item_concentration = 0.1;
  double learn_rate = 0.1;
  CreatorMode mode = CreatorMode::dirichlet_attrs;
  bool weight_by_count = true;

  Index size() const { return profiles.rows(); }
};

struct UtilityParams {
  double true_concentration = 100.0;
  double known_fraction_mean = 0.98;
  double known_fraction_concentration = 100.0;
};

UserPool generate_users(Index num, Index num_attrs, const VectorXd& concentration, RngStream& rng);
ItemCatalog generate_items(Index num, Index num_attrs, const VectorXd& concentration, RngStream& rng);

struct UtilityBlock {
  MatrixXd true_utility;
  MatrixXd known_utility;
  MatrixXd known_fraction;
};

/// true ~ BetaMean(dot(u, i), true_conc); known = true * BetaMean(frac_mean, frac_conc).
/// Draws are taken item-major so utilities for items appended later do not
/// disturb those of earlier items.
UtilityBlock generate_utilities(const MatrixXd& prefs, const MatrixXd& item_attrs,
                                const UtilityParams& params, RngStream& rng);

/// Generates utilities for catalog items [users.true_utility.cols(), items.size())
/// and appends them to the pool.
void extend_utilities(UserPool& users, const ItemCatalog& items, const UtilityParams& params,
                      RngStream& rng);

/// Rotates the user's preference row towards `item_attrs` by drift_weight.
/// Returns false (and leaves the row untouched) for a zero item vector.
bool drift_preferences(UserPool& users, UserId user, const VectorXd& item_attrs);

struct NewItems {
  MatrixXd attributes;  ///< A x n
  std::vector<std::int64_t> creators;
};

/// Each creator independently publishes one item with probability
/// creation_prob. Every creator draws from its own substream of `rng`, so the
/// output does not depend on iteration order.
NewItems creators_generate(const CreatorPool& creators, Timestep t, const RngStream& rng);

struct CreatorFeedback {
  VectorXd attributes;
  double count = 1.0;
};

/// Moves each creator with feedback towards the (count-weighted) mean of its
/// interacted items: gamma <- normalize((1 - eta) gamma + eta * mean).
void creators_update(CreatorPool& creators,
                     const std::vector<std::vector<CreatorFeedback>>& feedback_by_creator);

CreatorPool generate_creators(Index num, Index num_attrs, double profile_concentration,
                              RngStream& rng);

}  // namespace simrec
