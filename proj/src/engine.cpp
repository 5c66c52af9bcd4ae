#include "simrec/engine.hpp"

#include "simrec/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace simrec {

namespace {

// Stream tags. Startup and interleaving streams depend only on (t, user), so
// runs of different models over the same dataset see the same draws there.
constexpr std::uint64_t kDatasetTag = 0;
constexpr std::uint64_t kStartupTag = 1;
constexpr std::uint64_t kInterleaveTag = 2;
constexpr std::uint64_t kCreatorTag = 3;
constexpr std::uint64_t kTrainTag = 4;
constexpr std::uint64_t kUtilityTag = 5;

VectorXd concentration_vector(double value, Index num_attrs) {
  const double c = value > 0.0 ? value : 10.0 / static_cast<double>(num_attrs);
  return VectorXd::Constant(num_attrs, c);
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

std::string_view to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::single: return "single";
    case TrainingMode::repeated: return "repeated";
    case TrainingMode::never: return "never";
  }
  return "unknown";
}

TrainingMode parse_training_mode(std::string_view name) {
  if (name == "single") return TrainingMode::single;
  if (name == "repeated") return TrainingMode::repeated;
  if (name == "never") return TrainingMode::never;
  throw ConfigError("unknown training mode '" + std::string(name) + "'");
}

void SimulationConfig::validate() const {
  require(num_users >= 1, "num_users", "must be >= 1");
  require(num_items >= 0, "num_items", "must be >= 0");
  require(num_attrs >= 1, "num_attrs", "must be >= 1");
  require(timesteps >= 0, "timesteps", "must be >= 0");
  require(list_size >= 1, "list_size", "must be >= 1");
  require(startup_steps >= 0, "startup_steps", "must be >= 0");
  require(startup_steps == 0 || startup_steps < timesteps, "startup_steps",
          "must be smaller than timesteps");
  require(new_items_per_step >= 0, "new_items_per_step", "must be >= 0");
  require(drift_weight >= 0.0 && drift_weight <= 1.0, "drift_weight", "must lie in [0, 1]");
  require(attention_decay > 0.0 && attention_decay <= 1.0, "attention_decay",
          "must lie in (0, 1]");
  require(user_concentration >= 0.0, "user_concentration", "must be >= 0");
  require(item_concentration >= 0.0, "item_concentration", "must be >= 0");
  require(utility.true_concentration > 0.0, "utility.true_concentration", "must be > 0");
  require(utility.known_fraction_mean >= 0.0 && utility.known_fraction_mean <= 1.0,
          "utility.known_fraction_mean", "must lie in [0, 1]");
  require(utility.known_fraction_concentration > 0.0, "utility.known_fraction_concentration",
          "must be > 0");
  const AlsOptions& als = model_params.als;
  require(als.factors >= 1, "model_params.als.factors", "must be >= 1");
  require(als.regularization > 0.0, "model_params.als.regularization", "must be > 0");
  require(als.confidence_alpha >= 0.0, "model_params.als.confidence_alpha", "must be >= 0");
  require(als.iterations >= 1, "model_params.als.iterations", "must be >= 1");
  require(model_params.als_warm_iterations >= 1, "model_params.als_warm_iterations", "must be >= 1");
  if (creators.enabled) {
    require(creators.num >= 1, "creators.num", "must be >= 1");
    require(creators.creation_prob >= 0.0 && creators.creation_prob <= 1.0,
            "creators.creation_prob", "must lie in [0, 1]");
    require(creators.item_concentration > 0.0, "creators.item_concentration", "must be > 0");
    require(creators.learn_rate > 0.0 && creators.learn_rate <= 1.0, "creators.learn_rate",
            "must lie in (0, 1]");
    require(creators.profile_concentration > 0.0, "creators.profile_concentration", "must be > 0");
    require(new_items_per_step == 0, "new_items_per_step",
            "must be 0 when creators supply new items");
  }
  for (const auto& name : metrics) {
    const auto observer = make_observer(name);  // throws on unknown names
    if (name == "jaccard" || name == "pairs" || name == "pairing_degenerate")
      require(num_users >= 2, "metrics", "'" + name + "' needs at least two users");
    if (name == "ace" || name == "ace_dirichlet" || name == "creator_profiles")
      require(creators.enabled, "metrics", "'" + name + "' needs creators.enabled");
  }
}

bool SimulationConfig::trains_at(Timestep t) const {
  switch (training) {
    case TrainingMode::single: return t == startup_steps;
    case TrainingMode::repeated: return t >= startup_steps;
    case TrainingMode::never: return false;
  }
  return false;
}

Index SimulationConfig::training_events() const {
  Index events = 0;
  for (Timestep t = 0; t < timesteps; ++t) events += trains_at(t) ? 1 : 0;
  return events;
}

Dataset generate_dataset(const SimulationConfig& config, const RngStream& rng) {
  config.validate();
  const RngStream base = rng.fork(kDatasetTag);
  RngStream user_rng = base.fork(1);
  RngStream item_rng = base.fork(2);
  RngStream utility_rng = base.fork(3);
  RngStream creator_rng = base.fork(4);

  Dataset data;
  data.users = generate_users(config.num_users, config.num_attrs,
                              concentration_vector(config.user_concentration, config.num_attrs),
                              user_rng);
  data.users.drift_weight = config.drift_weight;
  data.users.attention_decay = config.attention_decay;

  const VectorXd item_conc = concentration_vector(config.item_concentration, config.num_attrs);
  data.items = generate_items(config.num_items, config.num_attrs, item_conc, item_rng);
  for (Timestep t = 0; t < config.timesteps && config.new_items_per_step > 0; ++t) {
    const ItemCatalog batch = generate_items(config.new_items_per_step, config.num_attrs, item_conc, item_rng);
    data.items.append(batch.attributes, t);
  }
  if (data.items.size() == 0) data.items.attributes.resize(config.num_attrs, 0);
  extend_utilities(data.users, data.items, config.utility, utility_rng);

  if (config.creators.enabled) {
    CreatorPool pool = generate_creators(config.creators.num, config.num_attrs,
                                         config.creators.profile_concentration, creator_rng);
    pool.creation_prob = config.creators.creation_prob;
    pool.item_concentration = config.creators.item_concentration;
    pool.learn_rate = config.creators.learn_rate;
    pool.mode = config.creators.mode;
    pool.weight_by_count = config.creators.weight_by_count;
    data.creators = std::move(pool);
  }
  return data;
}

SparseMatrix<double> interaction_matrix(std::span<const Interaction> log, Index num_users, Index n) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(log.size());
  for (const auto& e : log)
    if (e.item < n) triplets.emplace_back(static_cast<Index>(e.user), static_cast<Index>(e.item), 1.0);
  SparseMatrix<double> m(num_users, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

std::vector<ItemId> interleave(std::span<const ItemId> recommended, std::span<const ItemId> new_items,
                               RngStream& rng) {
  std::vector<ItemId> out(recommended.begin(), recommended.end());
  out.reserve(recommended.size() + new_items.size());
  for (ItemId item : new_items) {
    const auto pos = rng.below(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), item);
  }
  return out;
}

std::optional<ItemId> select_interaction(std::span<const ItemId> presented,
                                         const Eigen::Ref<const VectorXd>& known_utility,
                                         double attention_decay) {
  std::optional<ItemId> best;
  double best_value = 0.0;
  double weight = 1.0;
  for (ItemId item : presented) {
    const double value = known_utility[item] * weight;
    if (!best || value > best_value) {
      best = item;
      best_value = value;
    }
    weight *= attention_decay;
  }
  return best;
}

Simulation::Simulation(SimulationConfig config, const Dataset& dataset, const RngStream& rng)
    : config_(std::move(config)),
      rng_(rng),
      schedule_(dataset.items),
      state_{0, dataset.users, ItemCatalog{}, dataset.creators,
             RecommenderModel(config_.model, config_.model_params), UserPairing{}, {}, true} {
  config_.validate();
  if (dataset.users.size() != config_.num_users || dataset.users.num_attrs() != config_.num_attrs)
    throw ConfigError("Simulation: dataset does not match the config");
  if (config_.creators.enabled != dataset.creators.has_value())
    throw ConfigError("Simulation: creators.enabled does not match the dataset");
  state_.users.drift_weight = config_.drift_weight;
  state_.users.attention_decay = config_.attention_decay;
  const Index initial = std::min<Index>(config_.num_items, schedule_.size());
  state_.items.attributes = schedule_.attributes.leftCols(initial);
  state_.items.created_at.assign(schedule_.created_at.begin(), schedule_.created_at.begin() + initial);
  state_.items.interaction_counts.assign(static_cast<std::size_t>(initial), 0);
  state_.items.creator.assign(static_cast<std::size_t>(initial), -1);
  if (config_.num_users >= 2)
    state_.pairing = pair_users_by_similarity(MatrixXd::Zero(config_.num_users, 1));
  for (const auto& name : config_.metrics) registry_.add(make_observer(name));
}

SimulationView Simulation::view() const {
  return SimulationView{state_.t, state_.users, state_.items, state_.model,
                        state_.creators ? &*state_.creators : nullptr, state_.pairing};
}

void Simulation::retrain(Timestep t) {
  const Index n = state_.items.size();
  const SparseMatrix<double> counts = interaction_matrix(state_.log, state_.users.size(), n);
  RngStream train_rng = rng_.fork(kTrainTag, static_cast<std::uint64_t>(t));
  state_.model.train(counts, state_.users, state_.items, train_rng);
  if (state_.users.size() >= 2) {
    const MatrixXd& repr = state_.model.user_repr();
    state_.pairing = repr.rows() == state_.users.size() && repr.cols() > 0
                         ? pair_users_by_similarity(repr)
                         : pair_users_by_similarity(MatrixXd::Zero(state_.users.size(), 1));
  }
}

void Simulation::reveal_items(Timestep t) {
  const Index have = state_.items.size();
  Index upto = have;
  while (upto < schedule_.size() && schedule_.created_at[static_cast<std::size_t>(upto)] <= t) ++upto;
  if (upto > have) state_.items.append(schedule_.attributes.middleCols(have, upto - have), t);

  if (state_.creators) {
    const NewItems made = creators_generate(*state_.creators, t, rng_.fork(kCreatorTag));
    if (made.attributes.cols() > 0) {
      state_.items.append(made.attributes, t, made.creators);
      RngStream utility_rng = rng_.fork(kUtilityTag, static_cast<std::uint64_t>(t));
      extend_utilities(state_.users, state_.items, config_.utility, utility_rng);
    }
  }
}

std::vector<ItemId> Simulation::present(UserId user, Timestep t, bool startup, ItemId first_new) const {
  const auto& history = state_.users.interacted[static_cast<std::size_t>(user)];
  const std::span<const ItemId> exclude =
      config_.repeat_interaction ? std::span<const ItemId>{} : std::span<const ItemId>(history);
  const Index visible = state_.items.size();
  const auto excluded = [&](ItemId i) { return std::binary_search(exclude.begin(), exclude.end(), i); };

  if (startup) {
    std::vector<ItemId> pool;
    pool.reserve(static_cast<std::size_t>(visible));
    for (ItemId i = 0; i < visible; ++i)
      if (!excluded(i)) pool.push_back(i);
    RngStream rng = rng_.fork(kStartupTag, static_cast<std::uint64_t>(t)).fork(static_cast<std::uint64_t>(user));
    const std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(config_.list_size));
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t k = j + static_cast<std::size_t>(rng.below(pool.size() - j));
      std::swap(pool[j], pool[k]);
    }
    pool.resize(take);
    return pool;
  }

  std::vector<ItemId> recommended;
  if (state_.model.train_count() > 0 && state_.model.trained_items() > 0)
    recommended = state_.model.recommend(user, config_.list_size, exclude);
  const ItemId from = config_.persistent_interleave ? state_.model.trained_items() : first_new;
  std::vector<ItemId> fresh;
  for (ItemId i = from; i < visible; ++i)
    if (!excluded(i)) fresh.push_back(i);
  RngStream rng = rng_.fork(kInterleaveTag, static_cast<std::uint64_t>(t)).fork(static_cast<std::uint64_t>(user));
  return interleave(recommended, fresh, rng);
}

void Simulation::apply_drift(UserId user, ItemId item) {
  UserPool& users = state_.users;
  const VectorXd before = users.actual_prefs.row(user).transpose();
  if (!drift_preferences(users, user, state_.items.attributes.col(item))) return;
  const VectorXd delta = users.actual_prefs.row(user).transpose() - before;
  // Utilities follow the preference shift; known stays a fixed fraction of true.
  for (Index i = 0; i < users.true_utility.cols(); ++i) {
    const auto attrs = i < schedule_.size() ? schedule_.attributes.col(i) : state_.items.attributes.col(i);
    const double shifted = std::clamp(users.true_utility(user, i) + delta.dot(attrs), 0.0, 1.0);
    users.true_utility(user, i) = shifted;
    users.known_utility(user, i) = shifted * users.known_fraction(user, i);
  }
}

bool Simulation::step() {
  if (!state_.active || state_.t >= config_.timesteps) return false;
  if (!baseline_done_) {
    registry_.notify_baseline(view());
    baseline_done_ = true;
  }
  const Timestep t = state_.t;
  const bool startup = t < config_.startup_steps;

  if (config_.trains_at(t)) retrain(t);
  const ItemId first_new = state_.items.size();
  reveal_items(t);

  const double decay = startup && !config_.attention_in_startup ? 1.0 : config_.attention_decay;
  std::vector<std::pair<UserId, ItemId>> chosen;
  chosen.reserve(static_cast<std::size_t>(state_.users.size()));
  for (UserId u = 0; u < state_.users.size(); ++u) {
    const std::vector<ItemId> presented = present(u, t, startup, first_new);
    const auto pick = select_interaction(presented, state_.users.known_utility.row(u).transpose(), decay);
    if (pick) chosen.emplace_back(u, *pick);
  }
  if (chosen.empty()) {
    state_.active = false;
    return false;
  }

  std::map<ItemId, double> step_counts;
  for (const auto& [u, i] : chosen) {
    state_.users.record_interaction(u, i);
    ++state_.items.interaction_counts[static_cast<std::size_t>(i)];
    state_.log.push_back({u, i, t});
    step_counts[i] += 1.0;
  }
  if (state_.creators) {
    std::vector<std::vector<CreatorFeedback>> feedback(static_cast<std::size_t>(state_.creators->size()));
    for (const auto& [item, count] : step_counts) {
      const auto c = state_.items.creator[static_cast<std::size_t>(item)];
      if (c >= 0) feedback[static_cast<std::size_t>(c)].push_back({state_.items.attributes.col(item), count});
    }
    creators_update(*state_.creators, feedback);
  }
  if (config_.drift_weight > 0.0)
    for (const auto& [u, i] : chosen) apply_drift(u, i);

  state_.t = t + 1;
  registry_.notify(view());
  return true;
}

void Simulation::run() {
  while (step()) {
  }
}

RunResult run(const SimulationConfig& config) {
  const RngStream rng(config.seed, 0);
  const Dataset data = generate_dataset(config, rng);
  Simulation sim(config, data, rng);
  sim.run();
  return RunResult{sim.state(), sim.metrics().all_series()};
}

}  // namespace simrec
