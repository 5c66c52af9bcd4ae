#pragma once

#include "simrec/common.hpp"
#include "simrec/rng.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace simrec {

namespace detail {

template <typename A, typename B>
void require_inner_dims(const A& users, const B& items, const char* op) {
  if (users.cols() != items.rows()) {
    throw ConfigError(std::string(op) + ": inner dimensions disagree (" +
                      std::to_string(users.rows()) + "x" + std::to_string(users.cols()) + " vs " +
                      std::to_string(items.rows()) + "x" + std::to_string(items.cols()) + ")");
  }
}

}  // namespace detail

/// Scores from the inner product of user rows and item columns.
///
/// The accumulation order over attributes is fixed (ascending attribute index)
/// for both dense and sparse storage, so the two produce bitwise-identical
/// results for the same logical matrices.
template <typename DerivedU, typename DerivedI>
Matrix<typename DerivedU::Scalar> inner_product_scores(const Eigen::MatrixBase<DerivedU>& users,
                                                       const Eigen::MatrixBase<DerivedI>& items) {
  using Scalar = typename DerivedU::Scalar;
  detail::require_inner_dims(users, items, "inner_product_scores");
  // Item-major rows so the update below runs across items; each entry still
  // accumulates in ascending attribute order.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = items;
  Matrix<Scalar> out(users.rows(), items.cols());
  Vector<Scalar> acc(items.cols());
  for (Index u = 0; u < users.rows(); ++u) {
    acc.setZero();
    for (Index k = 0; k < rows.rows(); ++k) {
      const Scalar w = users(u, k);
      const Scalar* src = rows.row(k).data();
      Scalar* dst = acc.data();
      for (Index i = 0; i < rows.cols(); ++i) dst[i] += w * src[i];
    }
    out.row(u) = acc.transpose();
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> inner_product_scores(const SparseMatrix<Scalar>& users,
                                    const SparseMatrix<Scalar>& items) {
  detail::require_inner_dims(users, items, "inner_product_scores");
  const Eigen::SparseMatrix<Scalar, Eigen::ColMajor> cols = items;
  Matrix<Scalar> out(users.rows(), items.cols());
  for (Index u = 0; u < users.rows(); ++u) {
    for (Index i = 0; i < cols.cols(); ++i) {
      typename SparseMatrix<Scalar>::InnerIterator a(users, u);
      typename Eigen::SparseMatrix<Scalar, Eigen::ColMajor>::InnerIterator b(cols, i);
      Scalar acc(0);
      while (a && b) {
        if (a.index() < b.index()) {
          ++a;
        } else if (b.index() < a.index()) {
          ++b;
        } else {
          acc += a.value() * b.value();
          ++a;
          ++b;
        }
      }
      out(u, i) = acc;
    }
  }
  return out;
}

/// Cosine similarity between user rows and item columns. A zero-norm row or
/// column scores 0 against everything.
template <typename DerivedU, typename DerivedI>
Matrix<typename DerivedU::Scalar> cosine_scores(const Eigen::MatrixBase<DerivedU>& users,
                                                const Eigen::MatrixBase<DerivedI>& items) {
  using Scalar = typename DerivedU::Scalar;
  detail::require_inner_dims(users, items, "cosine_scores");
  Matrix<Scalar> out = inner_product_scores(users, items);
  Vector<Scalar> user_norm(users.rows());
  for (Index u = 0; u < users.rows(); ++u) {
    Scalar acc(0);
    for (Index k = 0; k < users.cols(); ++k) acc += users(u, k) * users(u, k);
    user_norm[u] = std::sqrt(acc);
  }
  Vector<Scalar> item_norm(items.cols());
  for (Index i = 0; i < items.cols(); ++i) {
    Scalar acc(0);
    for (Index k = 0; k < items.rows(); ++k) acc += items(k, i) * items(k, i);
    item_norm[i] = std::sqrt(acc);
  }
  for (Index u = 0; u < out.rows(); ++u) {
    for (Index i = 0; i < out.cols(); ++i) {
      const Scalar denom = user_norm[u] * item_norm[i];
      out(u, i) = denom > Scalar(0) ? out(u, i) / denom : Scalar(0);
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> cosine_scores(const SparseMatrix<Scalar>& users, const SparseMatrix<Scalar>& items) {
  detail::require_inner_dims(users, items, "cosine_scores");
  Matrix<Scalar> out = inner_product_scores(users, items);
  Vector<Scalar> user_norm(users.rows());
  for (Index u = 0; u < users.rows(); ++u) {
    Scalar acc(0);
    for (typename SparseMatrix<Scalar>::InnerIterator it(users, u); it; ++it)
      acc += it.value() * it.value();
    user_norm[u] = std::sqrt(acc);
  }
  const Eigen::SparseMatrix<Scalar, Eigen::ColMajor> cols = items;
  Vector<Scalar> item_norm(items.cols());
  for (Index i = 0; i < cols.cols(); ++i) {
    Scalar acc(0);
    for (typename Eigen::SparseMatrix<Scalar, Eigen::ColMajor>::InnerIterator it(cols, i); it; ++it)
      acc += it.value() * it.value();
    item_norm[i] = std::sqrt(acc);
  }
  for (Index u = 0; u < out.rows(); ++u) {
    for (Index i = 0; i < out.cols(); ++i) {
      const Scalar denom = user_norm[u] * item_norm[i];
      out(u, i) = denom > Scalar(0) ? out(u, i) / denom : Scalar(0);
    }
  }
  return out;
}

/// Sparse storage pays off below this fill ratio.
inline bool prefers_sparse(Index nonzeros, Index rows, Index cols) {
  return rows * cols > 0 && static_cast<double>(nonzeros) < 0.1 * static_cast<double>(rows * cols);
}

// ---------------------------------------------------------------------------
// Non-negative least squares (Lawson-Hanson active set)

struct NnlsOptions {
  int max_iterations = 0;  ///< 0 selects 3 * columns
  double tolerance = 0.0;  ///< 0 selects a scale-aware default
};

/// argmin ||design * x - target||_2 subject to x >= 0.
VectorXd nnls(const MatrixXd& design, const VectorXd& target, const NnlsOptions& options = {});

/// Same minimiser expressed through the normal equations: minimises
/// x' gram x - 2 x' rhs over x >= 0. gram must be symmetric positive
/// semidefinite and rhs in its range (as when gram = A'A, rhs = A'b).
VectorXd nnls_normal(const MatrixXd& gram, const VectorXd& rhs, const NnlsOptions& options = {});

/// nnls_normal with the eigendecomposition of `gram` computed once and
/// reused across right-hand sides.
class NormalNnlsSolver {
 public:
  explicit NormalNnlsSolver(const MatrixXd& gram, NnlsOptions options = {});
  VectorXd solve(const VectorXd& rhs) const;

 private:
  MatrixXd design_;
  MatrixXd projector_;  ///< maps rhs to the least-squares target
  NnlsOptions options_;
};

// ---------------------------------------------------------------------------
// Implicit-feedback alternating least squares

struct AlsOptions {
  Index factors = 20;
  double regularization = 0.01;
  double confidence_alpha = 40.0;  ///< confidence = 1 + alpha * count
  int iterations = 15;
  double init_scale = 0.1;
};

struct AlsFactors {
  MatrixXd users;                  ///< |U| x k
  MatrixXd items;                  ///< k x |I|
  std::vector<double> objective;   ///< after initialisation, then after each iteration
};

/// Weighted objective sum c_ui (p_ui - x_u.y_i)^2 + reg (|X|^2 + |Y|^2) with
/// p_ui = [count > 0] and c_ui = 1 + alpha * count.
double als_objective(const SparseMatrix<double>& interactions, const MatrixXd& users,
                     const MatrixXd& items, double confidence_alpha, double regularization);

AlsFactors als_factorize(const SparseMatrix<double>& interactions, const AlsOptions& options,
                         RngStream& rng);
/// Warm start from existing factors. Interactions may have gained item
/// columns since `previous` was computed; new item factors start at zero.
AlsFactors als_factorize(const SparseMatrix<double>& interactions, const AlsOptions& options,
                         const AlsFactors& previous, RngStream& rng);
AlsFactors als_factorize(const MatrixXd& interactions, const AlsOptions& options, RngStream& rng);

// ---------------------------------------------------------------------------
// Interpolation

/// Rotates `from` towards `to` by fraction t of the angle between them,
/// keeping the norm of `from`.
VectorXd slerp(const VectorXd& from, const VectorXd& to, double t);

// ---------------------------------------------------------------------------
// Sampling

double sample_gamma(double shape, RngStream& rng);
/// log of a Gamma(shape, 1) draw; finite even when the draw underflows.
double sample_log_gamma(double shape, RngStream& rng);
VectorXd sample_dirichlet(const VectorXd& alpha, RngStream& rng);
/// Beta(mean * concentration, (1 - mean) * concentration).
double sample_beta_mean(double mean, double concentration, RngStream& rng);

/// Discrete power law P(k) ~ k^-alpha on 1..max_degree, sampled by inverse CDF.
class PowerLawDegreeSampler {
 public:
  PowerLawDegreeSampler(double alpha, std::int64_t max_degree);
  std::int64_t operator()(RngStream& rng) const;
  double mean() const;
  double probability(std::int64_t k) const;

 private:
  double alpha_;
  std::vector<double> cdf_;
};

/// n i.i.d. degrees truncated at n - 1, with the total made even.
std::vector<std::int64_t> sample_power_law_degrees(std::int64_t n, double alpha, RngStream& rng);

// ---------------------------------------------------------------------------
// Set and distribution statistics

/// |A n B| / |A u B| on sorted, duplicate-free id lists; two empty sets give 1.
double jaccard(std::span<const ItemId> a, std::span<const ItemId> b);

/// -sum p ln p in nats.
double shannon_entropy(const VectorXd& p);

/// Differential entropy of Dirichlet(alpha).
double dirichlet_entropy(const VectorXd& alpha);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace simrec
