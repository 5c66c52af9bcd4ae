#include "simrec/agents.hpp"

#include "simrec/numerics.hpp"

#include <algorithm>

namespace simrec {

bool UserPool::has_interacted(UserId user, ItemId item) const {
  const auto& h = interacted[static_cast<std::size_t>(user)];
  return std::binary_search(h.begin(), h.end(), item);
}

bool UserPool::record_interaction(UserId user, ItemId item) {
  auto& h = interacted[static_cast<std::size_t>(user)];
  const auto it = std::lower_bound(h.begin(), h.end(), item);
  if (it != h.end() && *it == item) return false;
  h.insert(it, item);
  return true;
}

ItemId ItemCatalog::append(const MatrixXd& columns, Timestep t, std::span<const std::int64_t> creators) {
  const Index first = size();
  if (columns.cols() == 0) return first;
  if (first > 0 && columns.rows() != num_attrs())
    throw ConfigError("ItemCatalog::append: attribute count mismatch");
  if (!creators.empty() && static_cast<Index>(creators.size()) != columns.cols())
    throw ConfigError("ItemCatalog::append: creator list length mismatch");
  MatrixXd grown(columns.rows(), first + columns.cols());
  if (first > 0) grown.leftCols(first) = attributes;
  grown.rightCols(columns.cols()) = columns;
  attributes = std::move(grown);
  for (Index j = 0; j < columns.cols(); ++j) {
    created_at.push_back(t);
    interaction_counts.push_back(0);
    creator.push_back(creators.empty() ? -1 : creators[static_cast<std::size_t>(j)]);
  }
  return first;
}

namespace {

void check_generation(Index num, Index num_attrs, const VectorXd& concentration, bool allow_empty) {
  if (num < (allow_empty ? 0 : 1)) throw ConfigError("population size must be >= 1");
  if (num_attrs < 1) throw ConfigError("num_attrs must be >= 1");
  if (concentration.size() != num_attrs)
    throw ConfigError("concentration length must equal num_attrs");
  for (Index j = 0; j < concentration.size(); ++j)
    if (!(concentration[j] > 0.0)) throw DomainError("concentration entries must be positive");
}

}  // namespace

UserPool generate_users(Index num, Index num_attrs, const VectorXd& concentration, RngStream& rng) {
  check_generation(num, num_attrs, concentration, false);
  UserPool pool;
  pool.actual_prefs.resize(num, num_attrs);
  for (Index u = 0; u < num; ++u) pool.actual_prefs.row(u) = sample_dirichlet(concentration, rng).transpose();
  pool.true_utility.resize(num, 0);
  pool.known_utility.resize(num, 0);
  pool.known_fraction.resize(num, 0);
  pool.interacted.assign(static_cast<std::size_t>(num), {});
  return pool;
}

ItemCatalog generate_items(Index num, Index num_attrs, const VectorXd& concentration, RngStream& rng) {
  check_generation(num, num_attrs, concentration, true);
  ItemCatalog catalog;
  catalog.attributes.resize(num_attrs, num);
  for (Index i = 0; i < num; ++i) catalog.attributes.col(i) = sample_dirichlet(concentration, rng);
  catalog.created_at.assign(static_cast<std::size_t>(num), 0);
  catalog.interaction_counts.assign(static_cast<std::size_t>(num), 0);
  catalog.creator.assign(static_cast<std::size_t>(num), -1);
  return catalog;
}

UtilityBlock generate_utilities(const MatrixXd& prefs, const MatrixXd& item_attrs,
                                const UtilityParams& params, RngStream& rng) {
  if (prefs.cols() != item_attrs.rows())
    throw ConfigError("generate_utilities: attribute counts differ between users and items");
  const MatrixXd means = inner_product_scores(prefs, item_attrs);
  UtilityBlock block;
  block.true_utility.resize(prefs.rows(), item_attrs.cols());
  block.known_fraction.resize(prefs.rows(), item_attrs.cols());
  for (Index i = 0; i < item_attrs.cols(); ++i) {
    for (Index u = 0; u < prefs.rows(); ++u) {
      // Simplex rows and columns keep the dot product in [0, 1] up to rounding.
      const double mean = std::clamp(means(u, i), 0.0, 1.0);
      block.true_utility(u, i) = sample_beta_mean(mean, params.true_concentration, rng);
      block.known_fraction(u, i) =
          sample_beta_mean(params.known_fraction_mean, params.known_fraction_concentration, rng);
    }
  }
  block.known_utility = block.true_utility.cwiseProduct(block.known_fraction);
  return block;
}

void extend_utilities(UserPool& users, const ItemCatalog& items, const UtilityParams& params,
                      RngStream& rng) {
  const Index have = users.true_utility.cols();
  const Index want = items.size();
  if (want <= have) return;
  const UtilityBlock block =
      generate_utilities(users.actual_prefs, items.attributes.rightCols(want - have), params, rng);
  auto grow = [&](MatrixXd& m, const MatrixXd& extra) {
    MatrixXd out(users.size(), want);
    if (have > 0) out.leftCols(have) = m;
    out.rightCols(want - have) = extra;
    m = std::move(out);
  };
  grow(users.true_utility, block.true_utility);
  grow(users.known_utility, block.known_utility);
  grow(users.known_fraction, block.known_fraction);
}

bool drift_preferences(UserPool& users, UserId user, const VectorXd& item_attrs) {
  if (!(users.drift_weight >= 0.0 && users.drift_weight <= 1.0))
    throw DomainError("drift_weight must lie in [0, 1]");
  if (item_attrs.norm() == 0.0) {
    warn("drift_preferences: zero item vector, preferences left unchanged");
    return false;
  }
  const VectorXd row = users.actual_prefs.row(user).transpose();
  if (row.norm() == 0.0) return false;
  users.actual_prefs.row(user) = slerp(row, item_attrs, users.drift_weight).transpose();
  return true;
}

CreatorPool generate_creators(Index num, Index num_attrs, double profile_concentration,
                              RngStream& rng) {
  if (num < 1) throw ConfigError("creator count must be >= 1");
  if (!(profile_concentration > 0.0)) throw DomainError("profile concentration must be positive");
  CreatorPool pool;
  const VectorXd alpha = VectorXd::Constant(num_attrs, profile_concentration);
  pool.profiles.resize(num, num_attrs);
  for (Index c = 0; c < num; ++c) pool.profiles.row(c) = sample_dirichlet(alpha, rng).transpose();
  return pool;
}

NewItems creators_generate(const CreatorPool& creators, Timestep t, const RngStream& rng) {
  const RngStream step_rng = rng.fork(static_cast<std::uint64_t>(t));
  std::vector<VectorXd> made;
  NewItems out;
  for (Index c = 0; c < creators.size(); ++c) {
    RngStream crng = step_rng.fork(static_cast<std::uint64_t>(c));
    if (!crng.bernoulli(creators.creation_prob)) continue;
    const VectorXd gamma = creators.profiles.row(c).transpose();
    VectorXd item(gamma.size());
    if (creators.mode == CreatorMode::dirichlet_attrs) {
      // Zero profile entries would make the Dirichlet improper; floor them.
      const VectorXd alpha = (gamma * creators.item_concentration).cwiseMax(1e-300);
      item = sample_dirichlet(alpha, crng);
    } else {
      for (Index a = 0; a < gamma.size(); ++a) item[a] = crng.bernoulli(gamma[a]) ? 1.0 : 0.0;
    }
    made.push_back(std::move(item));
    out.creators.push_back(c);
  }
  out.attributes.resize(creators.profiles.cols(), static_cast<Index>(made.size()));
  for (std::size_t j = 0; j < made.size(); ++j) out.attributes.col(static_cast<Index>(j)) = made[j];
  return out;
}

void creators_update(CreatorPool& creators,
                     const std::vector<std::vector<CreatorFeedback>>& feedback_by_creator) {
  if (!(creators.learn_rate > 0.0 && creators.learn_rate <= 1.0))
    throw DomainError("creator learn_rate must lie in (0, 1]");
  if (static_cast<Index>(feedback_by_creator.size()) > creators.size())
    throw ConfigError("creators_update: more feedback lists than creators");
  for (std::size_t c = 0; c < feedback_by_creator.size(); ++c) {
    const auto& feedback = feedback_by_creator[c];
    if (feedback.empty()) continue;
    VectorXd mean = VectorXd::Zero(creators.profiles.cols());
    double weight = 0.0;
    for (const auto& f : feedback) {
      const double w = creators.weight_by_count ? f.count : 1.0;
      mean += w * f.attributes;
      weight += w;
    }
    if (weight <= 0.0) continue;
    mean /= weight;
    const auto row = static_cast<Index>(c);
    VectorXd gamma = (1.0 - creators.learn_rate) * creators.profiles.row(row).transpose() +
                     creators.learn_rate * mean;
    gamma = gamma.cwiseMax(0.0);
    const double total = gamma.sum();
    if (total > 0.0) creators.profiles.row(row) = (gamma / total).transpose();
  }
}

}  // namespace simrec
