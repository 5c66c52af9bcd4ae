#include "simrec/models.hpp"

#include <algorithm>
#include <numeric>

namespace simrec {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::content: return "content";
    case ModelKind::popularity: return "popularity";
    case ModelKind::matrix_factorization: return "matrix_factorization";
    case ModelKind::social: return "social";
    case ModelKind::random: return "random";
    case ModelKind::ideal: return "ideal";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : all_model_kinds())
    if (name == to_string(k)) return k;
  if (name == "mf") return ModelKind::matrix_factorization;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds{ModelKind::content, ModelKind::popularity,
                                            ModelKind::matrix_factorization, ModelKind::social,
                                            ModelKind::random, ModelKind::ideal};
  return kinds;
}

RecommenderModel::RecommenderModel(ModelKind kind, ModelParams params)
    : kind_(kind), params_(std::move(params)) {}

void RecommenderModel::train(const SparseMatrix<double>& interactions, const UserPool& users,
                             const ItemCatalog& items, RngStream& rng) {
  const Index n = interactions.cols();
  if (interactions.rows() != users.size())
    throw ConfigError("train: interaction rows must equal the number of users");
  if (n > items.size()) throw ConfigError("train: more interaction columns than catalog items");

  switch (kind_) {
    case ModelKind::content:
      train_content(interactions, items.attributes.leftCols(n));
      break;
    case ModelKind::popularity:
      train_popularity(interactions, users.size());
      break;
    case ModelKind::matrix_factorization:
      train_mf(interactions, rng);
      break;
    case ModelKind::social:
      train_social(interactions, users);
      break;
    case ModelKind::random: {
      scores_.resize(users.size(), n);
      for (Index j = 0; j < scores_.size(); ++j) scores_.data()[j] = rng.uniform();
      // A random representation gives the similarity pairing something to work on.
      user_repr_.resize(users.size(), users.num_attrs());
      for (Index j = 0; j < user_repr_.size(); ++j) user_repr_.data()[j] = rng.uniform();
      item_repr_.resize(0, 0);
      break;
    }
    case ModelKind::ideal:
      if (users.true_utility.cols() < n) throw ConfigError("train: utilities missing for some items");
      scores_ = users.true_utility.leftCols(n);
      user_repr_ = users.actual_prefs;
      item_repr_ = items.attributes.leftCols(n);
      break;
  }
  ++train_count_;
}

void RecommenderModel::train_content(const SparseMatrix<double>& interactions, const MatrixXd& attrs) {
  const Index num_attrs = attrs.rows();
  const NormalNnlsSolver solver(attrs * attrs.transpose());
  user_repr_ = MatrixXd::Zero(interactions.rows(), num_attrs);
  VectorXd rhs(num_attrs);
  for (Index u = 0; u < interactions.rows(); ++u) {
    rhs.setZero();
    bool any = false;
    for (SparseMatrix<double>::InnerIterator it(interactions, u); it; ++it) {
      rhs.noalias() += it.value() * attrs.col(it.index());
      any = any || it.value() != 0.0;
    }
    if (any) user_repr_.row(u) = solver.solve(rhs).transpose();
  }
  item_repr_ = attrs;
  scores_ = inner_product_scores(user_repr_, item_repr_);
}

void RecommenderModel::train_popularity(const SparseMatrix<double>& interactions, Index num_users) {
  item_repr_ = MatrixXd::Zero(1, interactions.cols());
  for (Index u = 0; u < interactions.outerSize(); ++u)
    for (SparseMatrix<double>::InnerIterator it(interactions, u); it; ++it)
      item_repr_(0, it.index()) += it.value();
  user_repr_ = MatrixXd::Ones(num_users, 1);
  scores_ = inner_product_scores(user_repr_, item_repr_);
}

void RecommenderModel::train_mf(const SparseMatrix<double>& interactions, RngStream& rng) {
  const Index num_users = interactions.rows();
  const Index n = interactions.cols();
  if (interactions.nonZeros() == 0 || n == 0) {
    user_repr_ = MatrixXd::Zero(num_users, params_.als.factors);
    item_repr_ = MatrixXd::Zero(params_.als.factors, n);
    scores_ = MatrixXd::Zero(num_users, n);
    factors_.reset();
    return;
  }
  AlsOptions options = params_.als;
  // Early in a run the catalog can be smaller than the latent dimension.
  options.factors = std::min({options.factors, num_users, n});
  if (factors_ && !params_.als_cold_restart && factors_->users.cols() == options.factors) {
    options.iterations = params_.als_warm_iterations;
    factors_ = als_factorize(interactions, options, *factors_, rng);
  } else {
    factors_ = als_factorize(interactions, options, rng);
  }
  user_repr_ = factors_->users;
  item_repr_ = factors_->items;
  scores_ = inner_product_scores(user_repr_, item_repr_);
}

void RecommenderModel::train_social(const SparseMatrix<double>& interactions, const UserPool& users) {
  user_repr_ = adjacency_from_covariance(users.actual_prefs);
  item_repr_.resize(0, 0);
  scores_ = MatrixXd::Zero(users.size(), interactions.cols());
  // scores = adjacency * interactions, visiting only the stored interactions.
  for (Index v = 0; v < interactions.outerSize(); ++v) {
    for (SparseMatrix<double>::InnerIterator it(interactions, v); it; ++it) {
      for (Index u = 0; u < users.size(); ++u)
        if (user_repr_(u, v) != 0.0) scores_(u, it.index()) += user_repr_(u, v) * it.value();
    }
  }
}

std::vector<ItemId> top_k(const Eigen::Ref<const VectorXd>& scores, Index k,
                          std::span<const ItemId> exclude) {
  std::vector<ItemId> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  auto ex = exclude.begin();
  for (ItemId i = 0; i < scores.size(); ++i) {
    while (ex != exclude.end() && *ex < i) ++ex;
    if (ex != exclude.end() && *ex == i) continue;
    candidates.push_back(i);
  }
  const auto better = [&](ItemId a, ItemId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max<Index>(k, 0)), candidates.size());
  if (take < candidates.size()) {
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                     candidates.end(), better);
    candidates.resize(take);
  }
  std::sort(candidates.begin(), candidates.end(), better);
  return candidates;
}

std::vector<ItemId> RecommenderModel::recommend(UserId user, Index list_size,
                                                std::span<const ItemId> exclude) const {
  if (list_size < 1) throw ConfigError("recommend: list_size must be >= 1");
  if (user < 0 || user >= scores_.rows()) throw ConfigError("recommend: user id out of range");
  return top_k(scores_.row(user).transpose(), list_size, exclude);
}

MatrixXd adjacency_from_covariance(const MatrixXd& prefs) {
  const Index n = prefs.rows();
  if (n < 2) throw ConfigError("adjacency_from_covariance: need at least two users");
  const Index a = prefs.cols();
  const MatrixXd centered = prefs.colwise() - prefs.rowwise().mean();
  const MatrixXd cov = centered * centered.transpose() / static_cast<double>(a);
  double off_sum = 0.0;
  for (Index u = 0; u < n; ++u)
    for (Index v = 0; v < n; ++v)
      if (u != v) off_sum += cov(u, v);
  const double threshold = off_sum / static_cast<double>(n * (n - 1));

  MatrixXd adj = MatrixXd::Identity(n, n);
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (cov(u, v) > threshold) adj(u, v) = adj(v, u) = 1.0;
  for (Index u = 0; u < n; ++u) {
    bool isolated = true;
    for (Index v = 0; v < n && isolated; ++v)
      if (v != u && adj(u, v) != 0.0) isolated = false;
    if (!isolated) continue;
    Index best = -1;
    for (Index v = 0; v < n; ++v) {
      if (v == u) continue;
      if (best < 0 || cov(u, v) > cov(u, best)) best = v;
    }
    adj(u, best) = adj(best, u) = 1.0;
  }
  return adj;
}

}  // namespace simrec
