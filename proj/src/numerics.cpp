#include "simrec/numerics.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/random/gamma_distribution.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace simrec {

// ---------------------------------------------------------------------------
// NNLS

namespace {

VectorXd solve_passive(const MatrixXd& design, const VectorXd& target,
                       const std::vector<Index>& passive) {
  MatrixXd sub(design.rows(), static_cast<Index>(passive.size()));
  for (std::size_t j = 0; j < passive.size(); ++j) sub.col(static_cast<Index>(j)) = design.col(passive[j]);
  return sub.colPivHouseholderQr().solve(target);
}

}  // namespace

VectorXd nnls(const MatrixXd& design, const VectorXd& target, const NnlsOptions& options) {
  const Index m = design.rows();
  const Index n = design.cols();
  if (m < 1 || n < 1) throw ConfigError("nnls: design must be non-empty");
  if (target.size() != m) throw ConfigError("nnls: target length does not match design rows");

  const int max_iter = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(3 * n);
  const double scale = std::max(design.cwiseAbs().maxCoeff(), 1.0) *
                       std::max(target.cwiseAbs().maxCoeff(), 1.0);
  const double tol = options.tolerance > 0.0
                         ? options.tolerance
                         : 10.0 * std::numeric_limits<double>::epsilon() * scale *
                               static_cast<double>(std::max(m, n));

  VectorXd x = VectorXd::Zero(n);
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  VectorXd w = design.transpose() * (target - design * x);

  for (int outer = 0; outer < max_iter; ++outer) {
    Index best = -1;
    double best_w = tol;
    for (Index j = 0; j < n; ++j) {
      if (!in_passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    in_passive[best] = true;

    for (int inner = 0; inner <= 3 * n; ++inner) {
      std::vector<Index> passive;
      for (Index j = 0; j < n; ++j)
        if (in_passive[j]) passive.push_back(j);
      const VectorXd z_p = solve_passive(design, target, passive);

      bool feasible = true;
      for (Index j = 0; j < z_p.size(); ++j)
        if (z_p[j] <= 0.0) feasible = false;
      if (feasible) {
        x.setZero();
        for (std::size_t j = 0; j < passive.size(); ++j) x[passive[j]] = z_p[static_cast<Index>(j)];
        break;
      }

      // Step back towards the previous feasible point until a coordinate hits zero.
      double alpha = 1.0;
      Index blocking = -1;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const double zj = z_p[static_cast<Index>(j)];
        const double xj = x[passive[j]];
        if (zj <= 0.0) {
          const double step = xj / (xj - zj);
          if (blocking < 0 || step < alpha) {
            alpha = step;
            blocking = passive[j];
          }
        }
      }
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const Index col = passive[j];
        x[col] += alpha * (z_p[static_cast<Index>(j)] - x[col]);
        if (col == blocking || x[col] <= 0.0) {
          x[col] = 0.0;
          in_passive[col] = false;
        }
      }
    }
    w = design.transpose() * (target - design * x);
  }
  return x.cwiseMax(0.0);
}

NormalNnlsSolver::NormalNnlsSolver(const MatrixXd& gram, NnlsOptions options) : options_(options) {
  if (gram.rows() != gram.cols()) throw ConfigError("nnls_normal: gram must be square");
  // gram = V D V' turns the quadratic into ||D^1/2 V' x - D^-1/2 V' rhs||^2 + const.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const VectorXd d = eig.eigenvalues();
  const MatrixXd& v = eig.eigenvectors();
  const double cutoff = std::max(d.cwiseAbs().maxCoeff(), 1.0) * 1e-13;
  design_ = v.transpose();
  projector_ = v.transpose();
  for (Index j = 0; j < d.size(); ++j) {
    if (d[j] > cutoff) {
      const double s = std::sqrt(d[j]);
      design_.row(j) *= s;
      projector_.row(j) /= s;
    } else {
      design_.row(j).setZero();
      projector_.row(j).setZero();
    }
  }
}

VectorXd NormalNnlsSolver::solve(const VectorXd& rhs) const {
  if (rhs.size() != design_.cols()) throw ConfigError("nnls_normal: rhs length does not match gram");
  return nnls(design_, projector_ * rhs, options_);
}

VectorXd nnls_normal(const MatrixXd& gram, const VectorXd& rhs, const NnlsOptions& options) {
  return NormalNnlsSolver(gram, options).solve(rhs);
}

// ---------------------------------------------------------------------------
// ALS

namespace {

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// In-place Cholesky solve of a small SPD system, reading only the lower
// triangle of `a`. The generic dense path spends most of its time on
// dispatch at the sizes ALS uses.
void cholesky_solve_lower(MatrixXd& a, VectorXd& b) {
  const Index k = a.rows();
  for (Index j = 0; j < k; ++j) {
    double d = a(j, j);
    for (Index p = 0; p < j; ++p) d -= a(j, p) * a(j, p);
    if (!(d > 0.0)) throw DomainError("als: normal equations are not positive definite");
    d = std::sqrt(d);
    a(j, j) = d;
    for (Index i = j + 1; i < k; ++i) {
      double v = a(i, j);
      for (Index p = 0; p < j; ++p) v -= a(i, p) * a(j, p);
      a(i, j) = v / d;
    }
  }
  for (Index i = 0; i < k; ++i) {
    double v = b[i];
    for (Index p = 0; p < i; ++p) v -= a(i, p) * b[p];
    b[i] = v / a(i, i);
  }
  for (Index i = k - 1; i >= 0; --i) {
    double v = b[i];
    for (Index p = i + 1; p < k; ++p) v -= a(p, i) * b[p];
    b[i] = v / a(i, i);
  }
}

// One exact half-step: for each row r of `counts` (rows x cols, row-major),
// solve (F F' + sum_c (conf - 1) f_c f_c' + reg I) x = sum_c conf f_c, where
// F is k x cols.
void solve_side(const SparseMatrix<double>& counts, const MatrixXd& fixed, double alpha, double reg,
                MatrixXd& out /* rows x k */) {
  const Index k = fixed.rows();
  const MatrixXd gram = fixed * fixed.transpose();
  MatrixXd a(k, k);
  VectorXd b(k);
  MatrixXd g;
  for (Index r = 0; r < counts.rows(); ++r) {
    a = gram;
    a.diagonal().array() += reg;
    b.setZero();
    g.resize(k, counts.outerIndexPtr()[r + 1] - counts.outerIndexPtr()[r]);
    Index m = 0;
    for (SparseMatrix<double>::InnerIterator it(counts, r); it; ++it) {
      if (it.value() <= 0.0) continue;
      const double conf = 1.0 + alpha * it.value();
      const auto f = fixed.col(it.index());
      g.col(m++) = std::sqrt(conf - 1.0) * f;
      b.noalias() += conf * f;
    }
    // Lower triangle only; the factorization reads no more.
    if (m > 0) a.selfadjointView<Eigen::Lower>().rankUpdate(g.leftCols(m));
    cholesky_solve_lower(a, b);
    out.row(r) = b.transpose();
  }
}

}  // namespace

double als_objective(const SparseMatrix<double>& interactions, const MatrixXd& users,
                     const MatrixXd& items, double confidence_alpha, double regularization) {
  const MatrixXd scores = users * items;
  double total = scores.squaredNorm();
  for (Index u = 0; u < interactions.outerSize(); ++u) {
    for (SparseMatrix<double>::InnerIterator it(interactions, u); it; ++it) {
      if (it.value() <= 0.0) continue;
      const double s = scores(u, it.index());
      const double conf = 1.0 + confidence_alpha * it.value();
      total += conf * (1.0 - s) * (1.0 - s) - s * s;
    }
  }
  return total + regularization * (users.squaredNorm() + items.squaredNorm());
}

namespace {

void validate_als(const SparseMatrix<double>& interactions, const AlsOptions& options) {
  if (options.factors < 1) throw ConfigError("als_factorize: factors must be >= 1");
  if (!(options.regularization > 0.0)) throw ConfigError("als_factorize: regularization must be > 0");
  if (options.iterations < 1) throw ConfigError("als_factorize: iterations must be >= 1");
  if (options.confidence_alpha < 0.0) throw ConfigError("als_factorize: confidence_alpha must be >= 0");
  if (options.factors > std::min(interactions.rows(), interactions.cols()))
    throw ConfigError("als_factorize: factors (" + std::to_string(options.factors) +
                      ") exceeds min(|U|, |I|)");
}

AlsFactors run_als(const SparseMatrix<double>& interactions, const AlsOptions& options,
                   AlsFactors factors) {
  const SparseMatrix<double> by_item = ColMajorSparse(interactions).transpose();
  MatrixXd item_rows(interactions.cols(), options.factors);
  factors.objective.clear();
  factors.objective.push_back(als_objective(interactions, factors.users, factors.items,
                                            options.confidence_alpha, options.regularization));
  for (int it = 0; it < options.iterations; ++it) {
    solve_side(interactions, factors.items, options.confidence_alpha, options.regularization,
               factors.users);
    const MatrixXd user_cols = factors.users.transpose();
    solve_side(by_item, user_cols, options.confidence_alpha, options.regularization, item_rows);
    factors.items = item_rows.transpose();
    factors.objective.push_back(als_objective(interactions, factors.users, factors.items,
                                              options.confidence_alpha, options.regularization));
  }
  return factors;
}

}  // namespace

AlsFactors als_factorize(const SparseMatrix<double>& interactions, const AlsOptions& options,
                         RngStream& rng) {
  validate_als(interactions, options);
  AlsFactors init;
  init.users = MatrixXd(interactions.rows(), options.factors);
  init.items = MatrixXd(options.factors, interactions.cols());
  for (Index j = 0; j < init.users.size(); ++j)
    init.users.data()[j] = options.init_scale * rng.uniform();
  for (Index j = 0; j < init.items.size(); ++j)
    init.items.data()[j] = options.init_scale * rng.uniform();
  return run_als(interactions, options, std::move(init));
}

AlsFactors als_factorize(const SparseMatrix<double>& interactions, const AlsOptions& options,
                         const AlsFactors& previous, RngStream& rng) {
  validate_als(interactions, options);
  if (previous.users.rows() != interactions.rows() || previous.users.cols() != options.factors ||
      previous.items.rows() != options.factors || previous.items.cols() > interactions.cols()) {
    return als_factorize(interactions, options, rng);
  }
  AlsFactors init;
  init.users = previous.users;
  init.items = MatrixXd::Zero(options.factors, interactions.cols());
  init.items.leftCols(previous.items.cols()) = previous.items;
  return run_als(interactions, options, std::move(init));
}

AlsFactors als_factorize(const MatrixXd& interactions, const AlsOptions& options, RngStream& rng) {
  const SparseMatrix<double> sparse = interactions.sparseView();
  return als_factorize(sparse, options, rng);
}

// ---------------------------------------------------------------------------
// slerp

VectorXd slerp(const VectorXd& from, const VectorXd& to, double t) {
  if (from.size() != to.size()) throw ConfigError("slerp: vectors differ in dimension");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("slerp: t must lie in [0, 1]");
  const double from_norm = from.norm();
  const double to_norm = to.norm();
  if (from_norm == 0.0 || to_norm == 0.0) throw DomainError("slerp: zero vector");
  const VectorXd a = from / from_norm;
  const VectorXd b = to / to_norm;
  const double cos_theta = std::clamp(a.dot(b), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const double sin_theta = std::sin(theta);

  VectorXd dir;
  if (sin_theta < 1e-12) {
    if (cos_theta > 0.0) return from;
    // Antiparallel: rotate in the plane of `a` and the first coordinate axis
    // that is not collinear with it.
    VectorXd w;
    for (Index k = 0; k < a.size(); ++k) {
      VectorXd e = VectorXd::Unit(a.size(), k);
      w = e - e.dot(a) * a;
      if (w.norm() > 1e-6) break;
    }
    if (a.size() == 1 || w.norm() <= 1e-6) {
      // One-dimensional space: no rotation plane exists.
      dir = t < 0.5 ? a : b;
    } else {
      w.normalize();
      dir = std::cos(t * theta) * a + std::sin(t * theta) * w;
    }
  } else {
    dir = (std::sin((1.0 - t) * theta) / sin_theta) * a + (std::sin(t * theta) / sin_theta) * b;
  }
  return dir * (from_norm / dir.norm());
}

// ---------------------------------------------------------------------------
// Sampling

double sample_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
  return std::exp(sample_log_gamma(shape, rng));
}

double sample_log_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma shape must be positive");
  if (shape >= 1.0) {
    boost::random::gamma_distribution<double> dist(shape, 1.0);
    double g;
    do {
      g = dist(rng);
    } while (!(g > 0.0));
    return std::log(g);
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a), evaluated in log space.
  boost::random::gamma_distribution<double> dist(shape + 1.0, 1.0);
  double g;
  do {
    g = dist(rng);
  } while (!(g > 0.0));
  return std::log(g) + std::log(rng.uniform_open_zero()) / shape;
}

VectorXd sample_dirichlet(const VectorXd& alpha, RngStream& rng) {
  if (alpha.size() == 0) throw DomainError("sample_dirichlet: empty concentration");
  for (Index j = 0; j < alpha.size(); ++j)
    if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j]))
      throw DomainError("sample_dirichlet: concentration entries must be positive");
  VectorXd logs(alpha.size());
  for (Index j = 0; j < alpha.size(); ++j) logs[j] = sample_log_gamma(alpha[j], rng);
  const double top = logs.maxCoeff();
  VectorXd x = (logs.array() - top).exp().matrix();
  // Subnormal components carry no mass but make every later product slow.
  for (Index j = 0; j < x.size(); ++j)
    if (x[j] < std::numeric_limits<double>::min()) x[j] = 0.0;
  x /= x.sum();
  return x;
}

double sample_beta_mean(double mean, double concentration, RngStream& rng) {
  if (!(concentration > 0.0)) throw DomainError("sample_beta_mean: concentration must be positive");
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("sample_beta_mean: mean must lie in [0, 1]");
  if (mean == 0.0 || mean == 1.0) return mean;
  const double la = sample_log_gamma(mean * concentration, rng);
  const double lb = sample_log_gamma((1.0 - mean) * concentration, rng);
  // a / (a + b) = 1 / (1 + exp(lb - la))
  return 1.0 / (1.0 + std::exp(lb - la));
}

PowerLawDegreeSampler::PowerLawDegreeSampler(double alpha, std::int64_t max_degree) : alpha_(alpha) {
  if (!(alpha > 1.0)) throw DomainError("power-law exponent must exceed 1");
  if (max_degree < 1) throw ConfigError("power-law max degree must be >= 1");
  cdf_.resize(static_cast<std::size_t>(max_degree));
  double acc = 0.0;
  for (std::int64_t k = 1; k <= max_degree; ++k) {
    acc += std::pow(static_cast<double>(k), -alpha);
    cdf_[static_cast<std::size_t>(k - 1)] = acc;
  }
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::int64_t PowerLawDegreeSampler::operator()(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::int64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                            static_cast<std::ptrdiff_t>(cdf_.size()) - 1)) + 1;
}

double PowerLawDegreeSampler::probability(std::int64_t k) const {
  if (k < 1 || k > static_cast<std::int64_t>(cdf_.size())) return 0.0;
  const auto idx = static_cast<std::size_t>(k - 1);
  return idx == 0 ? cdf_[0] : cdf_[idx] - cdf_[idx - 1];
}

double PowerLawDegreeSampler::mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < cdf_.size(); ++j)
    m += static_cast<double>(j + 1) * probability(static_cast<std::int64_t>(j + 1));
  return m;
}

std::vector<std::int64_t> sample_power_law_degrees(std::int64_t n, double alpha, RngStream& rng) {
  if (!(alpha > 1.0)) throw DomainError("sample_power_law_degrees: alpha must exceed 1");
  if (n < 2) throw ConfigError("sample_power_law_degrees: n must be >= 2");
  const PowerLawDegreeSampler sampler(alpha, n - 1);
  std::vector<std::int64_t> degrees(static_cast<std::size_t>(n));
  std::int64_t total = 0;
  for (auto& d : degrees) {
    d = sampler(rng);
    total += d;
  }
  if (total % 2 != 0) {
    auto& d = degrees[rng.below(static_cast<std::uint64_t>(n))];
    // Stay inside the truncation bound; d == n - 1 >= 1 implies d - 1 >= 0.
    d += (d == n - 1) ? -1 : 1;
  }
  return degrees;
}

// ---------------------------------------------------------------------------
// Statistics

double jaccard(std::span<const ItemId> a, std::span<const ItemId> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double shannon_entropy(const VectorXd& p) {
  double sum = 0.0;
  double h = 0.0;
  for (Index j = 0; j < p.size(); ++j) {
    if (p[j] < 0.0 || !std::isfinite(p[j])) throw DomainError("shannon_entropy: negative component");
    sum += p[j];
    if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("shannon_entropy: components must sum to 1");
  return std::max(h, 0.0);
}

double dirichlet_entropy(const VectorXd& alpha) {
  const double a0 = alpha.sum();
  const auto k = static_cast<double>(alpha.size());
  double log_b = -std::lgamma(a0);
  double h = 0.0;
  for (Index j = 0; j < alpha.size(); ++j) {
    log_b += std::lgamma(alpha[j]);
    h -= (alpha[j] - 1.0) * boost::math::digamma(alpha[j]);
  }
  return log_b + (a0 - k) * boost::math::digamma(a0) + h;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxy += (x[j] - mx) * (y[j] - my);
    sxx += (x[j] - mx) * (x[j] - mx);
    syy += (y[j] - my) * (y[j] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace simrec
