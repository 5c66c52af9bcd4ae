#pragma once

#include "simrec/agents.hpp"
#include "simrec/common.hpp"
#include "simrec/numerics.hpp"
#include "simrec/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simrec {

enum class ModelKind { content, popularity, matrix_factorization, social, random, ideal };

std::string_view to_string(ModelKind kind);
/// Accepts the canonical names plus "mf".
ModelKind parse_model_kind(std::string_view name);
const std::vector<ModelKind>& all_model_kinds();

struct ModelParams {
  AlsOptions als;
  /// Iterations for warm-started retraining; the first fit uses als.iterations.
  int als_warm_iterations = 3;
  bool als_cold_restart = false;
};

/// One recommender behind a uniform train / score / rank interface.
///
/// Scores exist only for the items present at the most recent training
/// call; items created afterwards are not ranked until the model is
/// retrained (the engine exposes them through interleaving).
class RecommenderModel {
 public:
  explicit RecommenderModel(ModelKind kind, ModelParams params = {});

  ModelKind kind() const { return kind_; }
  const ModelParams& params() const { return params_; }

  /// interactions: |U| x n counts for the first n catalog items.
  void train(const SparseMatrix<double>& interactions, const UserPool& users,
             const ItemCatalog& items, RngStream& rng);

  /// Top list_size trained items by predicted score, highest first, ties to
  /// the lower id, skipping the sorted ids in `exclude`.
  std::vector<ItemId> recommend(UserId user, Index list_size, std::span<const ItemId> exclude) const;

  const MatrixXd& predicted_scores() const { return scores_; }
  const MatrixXd& user_repr() const { return user_repr_; }
  const MatrixXd& item_repr() const { return item_repr_; }
  Index trained_items() const { return scores_.cols(); }
  int train_count() const { return train_count_; }

 private:
  void train_content(const SparseMatrix<double>& interactions, const MatrixXd& attrs);
  void train_popularity(const SparseMatrix<double>& interactions, Index num_users);
  void train_mf(const SparseMatrix<double>& interactions, RngStream& rng);
  void train_social(const SparseMatrix<double>& interactions, const UserPool& users);

  ModelKind kind_;
  ModelParams params_;
  MatrixXd user_repr_;
  MatrixXd item_repr_;
  MatrixXd scores_;
  std::optional<AlsFactors> factors_;
  int train_count_ = 0;
};

/// Binary symmetric user graph: (u, v) linked when the covariance of their
/// preference rows exceeds the mean off-diagonal covariance. Every user
/// links to itself, and a user left without neighbours is linked to its
/// highest-covariance peer.
MatrixXd adjacency_from_covariance(const MatrixXd& actual_prefs);

/// Ranks `scores` descending with ties to the lower id, skipping `exclude`.
std::vector<ItemId> top_k(const Eigen::Ref<const VectorXd>& scores, Index k,
                          std::span<const ItemId> exclude);

}  // namespace simrec
