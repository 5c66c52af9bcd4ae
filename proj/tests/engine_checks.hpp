#pragma once

// Step-by-step invariant checks on a running simulation, shared by the unit
// and acceptance tests.

#include "simrec/engine.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace checks {

using namespace simrec;

/// Random small configuration covering every model, training mode and the
/// optional mechanisms. Sizes stay small enough to run a hundred in seconds.
inline SimulationConfig random_small_config(RngStream& rng) {
  SimulationConfig c;
  c.num_users = 2 + static_cast<Index>(rng.below(9));
  c.num_attrs = 2 + static_cast<Index>(rng.below(5));
  c.timesteps = 1 + static_cast<Index>(rng.below(25));
  c.list_size = 1 + static_cast<Index>(rng.below(6));
  c.startup_steps = static_cast<Index>(rng.below(static_cast<std::uint64_t>(c.timesteps)));
  const TrainingMode modes[] = {TrainingMode::single, TrainingMode::repeated, TrainingMode::never};
  c.training = modes[rng.below(3)];
  c.model = all_model_kinds()[rng.below(all_model_kinds().size())];
  c.model_params.als.factors = 1 + static_cast<Index>(rng.below(4));
  c.model_params.als.iterations = 3;
  c.repeat_interaction = rng.bernoulli(0.2);
  c.drift_weight = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
  c.attention_decay = 0.3 + 0.7 * rng.uniform();
  c.attention_in_startup = rng.bernoulli(0.5);
  c.persistent_interleave = rng.bernoulli(0.3);
  c.metrics = {"jaccard", "mse", "apdmci"};
  if (rng.bernoulli(0.4)) {
    c.creators.enabled = true;
    c.creators.num = 1 + static_cast<Index>(rng.below(6));
    c.creators.creation_prob = rng.uniform();
    c.creators.learn_rate = 0.05 + 0.9 * rng.uniform();
    c.creators.mode = rng.bernoulli(0.5) ? CreatorMode::dirichlet_attrs : CreatorMode::bernoulli_attrs;
    c.num_items = static_cast<Index>(rng.below(15));
    c.new_items_per_step = 0;
    c.metrics.push_back("ace");
  } else {
    c.num_items = static_cast<Index>(rng.below(30));
    c.new_items_per_step = static_cast<Index>(rng.below(4));
    if (c.num_items == 0 && c.new_items_per_step == 0) c.num_items = 5;
  }
  c.seed = rng();
  return c;
}

/// Runs the configuration step by step and returns a description of every
/// invariant violation (empty when all hold).
inline std::vector<std::string> engine_invariant_failures(const SimulationConfig& config) {
  std::vector<std::string> failures;
  auto fail = [&](const std::string& what, Timestep t) {
    if (failures.size() < 20) failures.push_back(what + " at step " + std::to_string(t));
  };
  const RngStream rng(config.seed, 0);
  const Dataset data = generate_dataset(config, rng);
  Simulation sim(config, data, rng);
  std::set<std::pair<UserId, ItemId>> seen;
  std::size_t logged = 0;
  while (true) {
    const SimulationState& before = sim.state();
    const MatrixXd prefs_before = before.users.actual_prefs;
    const auto history_before = before.users.interacted;
    if (!sim.step()) break;
    const SimulationState& s = sim.state();
    const Timestep t = s.t - 1;

    const std::size_t step_count = s.log.size() - logged;
    if (static_cast<Index>(step_count) > config.num_users) fail("more interactions than users", t);
    std::set<UserId> users_this_step;
    for (std::size_t j = logged; j < s.log.size(); ++j) {
      const Interaction& e = s.log[j];
      if (e.t != t) fail("log entry with wrong timestep", t);
      if (!users_this_step.insert(e.user).second) fail("user interacted twice in one step", t);
      if (!config.repeat_interaction && !seen.insert({e.user, e.item}).second)
        fail("repeat interaction", t);
      if (e.item < 0 || e.item >= s.items.size()) fail("interaction with an unrevealed item", t);
    }
    logged = s.log.size();

    for (Index u = 0; u < s.users.size(); ++u) {
      const double n0 = prefs_before.row(u).norm();
      const double n1 = s.users.actual_prefs.row(u).norm();
      if (std::abs(n0 - n1) > 1e-9) fail("drift changed a preference norm", t);
      const auto& h0 = history_before[static_cast<std::size_t>(u)];
      const auto& h1 = s.users.interacted[static_cast<std::size_t>(u)];
      for (ItemId i : h0)
        if (!std::binary_search(h1.begin(), h1.end(), i)) fail("interaction history shrank", t);
    }
    if ((s.users.known_utility.array() > s.users.true_utility.array()).any())
      fail("known utility above true utility", t);
    if (s.users.true_utility.cols() < s.items.size()) fail("utilities missing for revealed items", t);
    if (s.creators) {
      for (Index c = 0; c < s.creators->size(); ++c) {
        const auto row = s.creators->profiles.row(c);
        if (std::abs(row.sum() - 1.0) > 1e-9 || (row.array() < 0.0).any())
          fail("creator profile left the simplex", t);
      }
    }
  }
  for (const auto& [name, series] : sim.metrics().all_series()) {
    for (const auto& sample : series.samples())
      if (!sample.value.allFinite()) fail("non-finite metric " + name, sample.timestep);
  }
  return failures;
}

}  // namespace checks
